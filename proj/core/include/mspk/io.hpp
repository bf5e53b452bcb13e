#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mspk/model.hpp"
#include "mspk/overlap_sample.hpp"
#include "mspk/parisi.hpp"

namespace mspk {

/// Shortest round-trip-exact decimal form (17 significant digits).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// FNV-1a 64-bit content digest, hex encoded.
std::string content_digest(const std::string& content);
std::string file_digest(const std::string& path);

/// {"species": [..], "lambda": [..], "delta_sq": [[..]]}
ModelSpec parse_model_spec(const std::string& json_text);
ModelSpec load_model_spec(const std::string& path);
std::string model_spec_json(const ModelSpec& spec);

/// {"r": int, "zeta": [..], "q": {"<species>": [..]}}
RsbParams parse_rsb_params(const std::string& json_text, const ModelSpec& spec);
RsbParams load_rsb_params(const std::string& path, const ModelSpec& spec);
std::string rsb_params_json(const ModelSpec& spec, const RsbParams& params);

/// One row per (sample, l, l', species or "ALL", value), l <= l',
/// header included.
std::string overlap_sample_csv(const OverlapSample& sample);
OverlapSample parse_overlap_csv(const std::string& csv_text);
OverlapSample load_overlap_csv(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::string config_json;  // resolved configuration document
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
};

std::string manifest_json(const RunManifest& manifest);

}  // namespace mspk
