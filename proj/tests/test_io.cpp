#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>

#include "mspk/cascades.hpp"
#include "mspk/errors.hpp"
#include "mspk/io.hpp"
#include "mspk/model.hpp"

using namespace mspk;

namespace {

ModelSpec two_species() {
  return validate_model({"a", "b"}, {0.5, 0.5}, {{1.0, 0.5}, {0.5, 1.0}});
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 1.0, -1.5, 1.0 / 3.0, 1e-300, 6.02214076e23,
                   0.1 + 0.2, 1.0847590118593251}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("content digest is stable and content-sensitive") {
  const std::string digest = content_digest("hello");
  CHECK(digest == content_digest("hello"));
  CHECK(digest != content_digest("hello!"));
  CHECK(digest.size() == 16);  // 64-bit hex
}

TEST_CASE("model spec JSON round trip") {
  const ModelSpec spec = two_species();
  const ModelSpec back = parse_model_spec(model_spec_json(spec));
  CHECK(back.species == spec.species);
  CHECK(back.lambda == spec.lambda);
  CHECK(back.delta_sq == spec.delta_sq);
  CHECK(back.psd == spec.psd);
}

TEST_CASE("malformed or invalid model files") {
  CHECK_THROWS_AS(parse_model_spec("{not json"), validation_error);
  CHECK_THROWS_AS(parse_model_spec(R"({"species": ["a"], "lambda": [2.0], "delta_sq": [[1.0]]})"),
                  validation_error);

  const std::string path = "bad_model_test.json";
  write_text_file(path, "{broken");
  try {
    load_model_spec(path);
    CHECK(false);
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_model_spec("does_not_exist.json"), validation_error);
}

TEST_CASE("rsb params JSON round trip") {
  const ModelSpec spec = two_species();
  RsbParams params{2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
  const RsbParams back = parse_rsb_params(rsb_params_json(spec, params), spec);
  CHECK(back.r == 2);
  CHECK(back.zeta == params.zeta);
  CHECK(back.q == params.q);

  CHECK_THROWS_AS(
      parse_rsb_params(R"({"r": 1, "zeta": [0.5], "q": {"a": [0.0, 1.0]}})", spec),
      validation_error);  // missing species b
}

TEST_CASE("overlap CSV round trip") {
  const ModelSpec spec = two_species();
  const RsbParams params{2, {0.4, 0.8}, {{0.0, 0.3, 1.0}, {0.0, 0.5, 1.0}}};
  const std::vector<double> qc = {0.0, 0.4, 1.0};
  const OverlapSample sample = exact_overlap_samples(spec, params, qc, 3, 40, 2);
  const std::string csv = overlap_sample_csv(sample);
  CHECK(csv.rfind("sample,l,lp,species,value", 0) == 0);
  const OverlapSample back = parse_overlap_csv(csv);
  CHECK(back.species == sample.species);
  CHECK(back.n_replicas == sample.n_replicas);
  REQUIRE(back.draws.size() == sample.draws.size());
  for (std::size_t d = 0; d < back.draws.size(); ++d) {
    CHECK(back.draws[d].combined == sample.draws[d].combined);
    CHECK(back.draws[d].per_species == sample.draws[d].per_species);
  }
  // Serialization is deterministic, so the digests agree too.
  CHECK(content_digest(overlap_sample_csv(back)) == content_digest(csv));

  CHECK_THROWS_AS(parse_overlap_csv("not,a,valid,header\n"), validation_error);
}

TEST_CASE("manifest JSON carries the run description") {
  write_text_file("manifest_input_test.json", "{}");
  RunManifest manifest;
  manifest.command = "parisi-eval";
  manifest.inputs = {"manifest_input_test.json"};
  manifest.config_json = R"({"mode": "grid"})";
  manifest.seed = 42;
  manifest.version = "0.1.0";
  manifest.wall_seconds = 1.25;
  manifest.outputs = {{"out.json", "0123456789abcdef"}};
  const std::string doc = manifest_json(manifest);
  for (const char* needle : {"parisi-eval", "manifest_input_test.json", "grid",
                             "0.1.0", "out.json", "0123456789abcdef"})
    CHECK(doc.find(needle) != std::string::npos);
  std::remove("manifest_input_test.json");
}

TEST_CASE("text file round trip") {
  const std::string path = "io_roundtrip_test.txt";
  const std::string content = "line one\nline two\n";
  write_text_file(path, content);
  CHECK(read_text_file(path) == content);
  CHECK(file_digest(path) == content_digest(content));
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_text_file(path), validation_error);
}
