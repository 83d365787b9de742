#include "hybrur/params_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hybrur/errors.hpp"

namespace hybrur {

using nlohmann::json;

namespace {

constexpr const char* kSuffix[3] = {"_r", "_g", "_b"};

json to_doc(const DegradationParams& p) {
  json doc = json::object();
  for (std::size_t c = 0; c < 3; ++c) {
    doc[std::string("t_D") + kSuffix[c]] = p.t_d[c];
    doc[std::string("t_B") + kSuffix[c]] = p.t_b[c];
    doc[std::string("B_inf") + kSuffix[c]] = p.b_inf[c];
  }
  return doc;
}

DegradationParams from_doc(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "degradation parameters must be a JSON object");
  DegradationParams p;
  std::set<std::string> expected;
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto [prefix, triple] : {std::pair{"t_D", &p.t_d}, std::pair{"t_B", &p.t_b}, std::pair{"B_inf", &p.b_inf}}) {
      const std::string key = std::string(prefix) + kSuffix[c];
      if (!doc.contains(key)) throw ConfigError(key, "missing parameter '" + key + "'");
      if (!doc[key].is_number()) throw ConfigError(key, "parameter '" + key + "' must be a number");
      (*triple)[c] = doc[key].get<double>();
      expected.insert(key);
    }
  }
  for (const auto& item : doc.items())
    if (!expected.contains(item.key())) throw ConfigError(item.key(), "unknown parameter '" + item.key() + "'");
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string params_to_json(const DegradationParams& p) { return to_doc(p).dump(2); }

DegradationParams params_from_json(const std::string& text) { return from_doc(parse(text)); }

DegradationParams load_params(const std::filesystem::path& path) { return params_from_json(read_file(path)); }

void save_params(const std::filesystem::path& path, const DegradationParams& p) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot write file");
  out << params_to_json(p) << "\n";
}

std::string manifest_to_json(const SyntheticManifest& m) {
  json doc = {{"image", m.image},
              {"source", m.source},
              {"depth", m.depth},
              {"image_size", m.image_size},
              {"params", to_doc(m.params)}};
  return doc.dump(2);
}

SyntheticManifest manifest_from_json(const std::string& text) {
  auto doc = parse(text);
  SyntheticManifest m;
  try {
    m.image = doc.at("image").get<std::string>();
    m.source = doc.at("source").get<std::string>();
    m.depth = doc.at("depth").get<std::string>();
    m.image_size = doc.at("image_size").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("malformed manifest: ") + e.what());
  }
  m.params = from_doc(doc.at("params"));
  return m;
}

SyntheticManifest load_manifest(const std::filesystem::path& path) { return manifest_from_json(read_file(path)); }

}  // namespace hybrur
