#include "mspk/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mspk/errors.hpp"

namespace mspk {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write file: " + path);
  out << content;
  if (!out) throw validation_error("write failed: " + path);
}

std::string content_digest(const std::string& content) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : content) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) {
  return content_digest(read_text_file(path));
}

namespace {

json parse_json(const std::string& text, const std::string& context) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    throw validation_error("malformed JSON in " + context);
  return doc;
}

std::vector<double> as_doubles(const json& node, const std::string& context) {
  if (!node.is_array()) throw validation_error(context + " must be an array");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) {
    if (!v.is_number()) throw validation_error(context + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

ModelSpec parse_model_spec(const std::string& json_text) {
  json doc = parse_json(json_text, "model spec");
  for (const char* key : {"species", "lambda", "delta_sq"})
    if (!doc.contains(key))
      throw validation_error(std::string("model spec missing key: ") + key);
  std::vector<std::string> species;
  for (const auto& s : doc["species"]) {
    if (!s.is_string()) throw validation_error("species entries must be strings");
    species.push_back(s.get<std::string>());
  }
  std::vector<double> lambda = as_doubles(doc["lambda"], "lambda");
  if (!doc["delta_sq"].is_array())
    throw validation_error("delta_sq must be an array of rows");
  std::vector<std::vector<double>> delta_sq;
  for (const auto& row : doc["delta_sq"])
    delta_sq.push_back(as_doubles(row, "delta_sq row"));
  return validate_model(std::move(species), std::move(lambda), std::move(delta_sq));
}

ModelSpec load_model_spec(const std::string& path) {
  try {
    return parse_model_spec(read_text_file(path));
  } catch (const validation_error& e) {
    throw validation_error(std::string(e.what()) + " [" + path + "]");
  }
}

std::string model_spec_json(const ModelSpec& spec) {
  json doc;
  doc["species"] = spec.species;
  doc["lambda"] = spec.lambda;
  doc["delta_sq"] = spec.delta_sq;
  doc["psd"] = spec.psd;
  return doc.dump(2) + "\n";
}

RsbParams parse_rsb_params(const std::string& json_text, const ModelSpec& spec) {
  json doc = parse_json(json_text, "rsb params");
  for (const char* key : {"r", "zeta", "q"})
    if (!doc.contains(key))
      throw validation_error(std::string("rsb params missing key: ") + key);
  RsbParams params;
  if (!doc["r"].is_number_integer())
    throw validation_error("r must be an integer");
  params.r = doc["r"].get<int>();
  params.zeta = as_doubles(doc["zeta"], "zeta");
  if (!doc["q"].is_object())
    throw validation_error("q must map species names to sequences");
  for (const std::string& s : spec.species) {
    if (!doc["q"].contains(s))
      throw validation_error("q missing species: " + s);
    params.q.push_back(as_doubles(doc["q"][s], "q[" + s + "]"));
  }
  validate_rsb(spec, params);
  return params;
}

RsbParams load_rsb_params(const std::string& path, const ModelSpec& spec) {
  try {
    return parse_rsb_params(read_text_file(path), spec);
  } catch (const validation_error& e) {
    throw validation_error(std::string(e.what()) + " [" + path + "]");
  }
}

std::string rsb_params_json(const ModelSpec& spec, const RsbParams& params) {
  json doc;
  doc["r"] = params.r;
  doc["zeta"] = params.zeta;
  json q = json::object();
  for (std::size_t s = 0; s < spec.species.size(); ++s)
    q[spec.species[s]] = params.q[s];
  doc["q"] = q;
  return doc.dump(2) + "\n";
}

std::string overlap_sample_csv(const OverlapSample& sample) {
  std::ostringstream out;
  out << "sample,l,lp,species,value\n";
  const int n = sample.n_replicas;
  for (std::size_t d = 0; d < sample.draws.size(); ++d) {
    const OverlapDraw& draw = sample.draws[d];
    for (int l = 0; l < n; ++l)
      for (int lp = l; lp < n; ++lp) {
        out << d << ',' << l << ',' << lp << ",ALL,"
            << format_double(draw.combined[l][lp]) << '\n';
        for (std::size_t s = 0; s < sample.species.size(); ++s)
          out << d << ',' << l << ',' << lp << ',' << sample.species[s] << ','
              << format_double(draw.per_species[s][l][lp]) << '\n';
      }
  }
  return out.str();
}

OverlapSample parse_overlap_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample,l,lp,species,value", 0) != 0)
    throw validation_error("overlap CSV must start with its header row");
  struct Row {
    long sample;
    int l, lp;
    std::string species;
    double value;
  };
  std::vector<Row> rows;
  long max_sample = -1;
  int max_replica = -1;
  std::vector<std::string> species_order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row row;
    std::istringstream ls(line);
    std::string field;
    if (!std::getline(ls, field, ',')) throw validation_error("bad CSV row: " + line);
    row.sample = std::stol(field);
    if (!std::getline(ls, field, ',')) throw validation_error("bad CSV row: " + line);
    row.l = std::stoi(field);
    if (!std::getline(ls, field, ',')) throw validation_error("bad CSV row: " + line);
    row.lp = std::stoi(field);
    if (!std::getline(ls, row.species, ','))
      throw validation_error("bad CSV row: " + line);
    if (!std::getline(ls, field)) throw validation_error("bad CSV row: " + line);
    row.value = std::stod(field);
    max_sample = std::max(max_sample, row.sample);
    max_replica = std::max(max_replica, row.lp);
    if (row.species != "ALL") {
      bool seen = false;
      for (const auto& s : species_order) seen = seen || s == row.species;
      if (!seen) species_order.push_back(row.species);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw validation_error("overlap CSV has no data rows");
  OverlapSample sample;
  sample.species = species_order;
  sample.n_replicas = max_replica + 1;
  const int n = sample.n_replicas;
  const int ns = static_cast<int>(species_order.size());
  sample.draws.resize(max_sample + 1);
  for (auto& draw : sample.draws) {
    draw.combined.assign(n, std::vector<double>(n, 0.0));
    draw.per_species.assign(
        ns, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  }
  for (const Row& row : rows) {
    OverlapDraw& draw = sample.draws[row.sample];
    if (row.species == "ALL") {
      draw.combined[row.l][row.lp] = row.value;
      draw.combined[row.lp][row.l] = row.value;
    } else {
      for (int s = 0; s < ns; ++s)
        if (species_order[s] == row.species) {
          draw.per_species[s][row.l][row.lp] = row.value;
          draw.per_species[s][row.lp][row.l] = row.value;
        }
    }
  }
  return sample;
}

OverlapSample load_overlap_csv(const std::string& path) {
  try {
    return parse_overlap_csv(read_text_file(path));
  } catch (const validation_error& e) {
    throw validation_error(std::string(e.what()) + " [" + path + "]");
  }
}

std::string manifest_json(const RunManifest& manifest) {
  json doc;
  doc["command"] = manifest.command;
  doc["inputs"] = json::array();
  for (const auto& path : manifest.inputs) {
    json entry;
    entry["path"] = path;
    entry["digest"] = file_digest(path);
    doc["inputs"].push_back(entry);
  }
  doc["config"] = json::parse(manifest.config_json.empty() ? "{}" : manifest.config_json);
  doc["seed"] = manifest.seed;
  doc["version"] = manifest.version;
  doc["wall_seconds"] = manifest.wall_seconds;
  doc["outputs"] = json::array();
  for (const auto& [path, digest] : manifest.outputs) {
    json entry;
    entry["path"] = path;
    entry["digest"] = digest;
    doc["outputs"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

}  // namespace mspk
