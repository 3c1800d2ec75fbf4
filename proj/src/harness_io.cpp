#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "copjoint/errors.hpp"
#include "copjoint/harness.hpp"

namespace copjoint {

namespace {

void reject_unknown(const YAML::Node& node, const std::set<std::string>& known, const std::string& where) {
  std::vector<std::string> bad;
  for (const auto& kv : node) {
    const auto k = kv.first.as<std::string>();
    if (!known.count(k)) bad.push_back(k);
  }
  if (bad.empty()) return;
  std::string msg = where + ": unknown keys:";
  for (const auto& k : bad) msg += " '" + k + "'";
  throw ConfigError(msg);
}

std::vector<std::string> string_list(const YAML::Node& n, const std::string& key) {
  std::vector<std::string> out;
  if (!n) return out;
  if (n.IsScalar()) {
    out.push_back(n.as<std::string>());
    return out;
  }
  if (!n.IsSequence()) throw ConfigError(key + ": expected a list");
  for (const auto& v : n) out.push_back(v.as<std::string>());
  return out;
}

MarginSpec parse_margin(const YAML::Node& n, const std::string& where) {
  if (!n || !n.IsMap()) throw ConfigError("config: '" + where + "' section missing");
  reject_unknown(n, {"response", "link", "parametric", "categorical", "smooth"}, where);
  MarginSpec m;
  if (!n["response"]) throw ConfigError(where + ": response is required");
  m.response = n["response"].as<std::string>();
  if (n["link"]) {
    try {
      m.link = parse_link(n["link"].as<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  m.parametric_terms = string_list(n["parametric"], where + ".parametric");
  m.categorical_terms = string_list(n["categorical"], where + ".categorical");
  m.smooth_terms = string_list(n["smooth"], where + ".smooth");
  return m;
}

}  // namespace

std::vector<std::pair<Family, Rotation>> parse_family_list(const std::string& csv) {
  std::vector<std::pair<Family, Rotation>> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    Rotation r = Rotation::R0;
    std::string base = tok;
    for (const std::string suf : {"_180", "180"}) {
      if (base.size() > suf.size() && base.compare(base.size() - suf.size(), suf.size(), suf) == 0) {
        base = base.substr(0, base.size() - suf.size());
        r = Rotation::R180;
        break;
      }
    }
    try {
      out.emplace_back(parse_family(base), r);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("empty copula family list");
  return out;
}

std::vector<std::pair<Link, Link>> parse_link_pairs(const std::string& csv) {
  std::vector<std::pair<Link, Link>> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw ConfigError("link pair '" + tok + "' must be two letters, e.g. pp or pl");
    try {
      out.emplace_back(parse_link(tok.substr(0, 1)), parse_link(tok.substr(1, 1)));
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("empty link list");
  return out;
}

std::vector<GridRequest> cross_grid(const std::vector<std::pair<Family, Rotation>>& fams,
                                    const std::vector<std::pair<Link, Link>>& links) {
  std::vector<GridRequest> out;
  for (const auto& l : links) {
    for (const auto& f : fams) out.push_back({f.first, f.second, l.first, l.second});
  }
  return out;
}

AnalyzeConfig parse_analyze_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config: expected a mapping at the top level");
  reject_unknown(root,
                 {"treatment", "outcome", "families", "links", "basis_dim", "n_draws", "seed", "level", "sate_variant",
                  "student_df", "smooth_points", "level_labels", "reference_levels"},
                 "config");
  AnalyzeConfig c;
  try {
    c.spec.treatment = parse_margin(root["treatment"], "treatment");
    c.spec.outcome = parse_margin(root["outcome"], "outcome");
    c.spec.outcome.includes_treatment = true;
    std::string fams = "gaussian";
    std::string links = "pp";
    if (root["families"]) {
      fams.clear();
      for (const auto& s : string_list(root["families"], "families")) fams += s + ",";
    }
    if (root["links"]) {
      links.clear();
      for (const auto& s : string_list(root["links"], "links")) links += s + ",";
    }
    c.grid = cross_grid(parse_family_list(fams), parse_link_pairs(links));
    if (root["basis_dim"]) c.spec.basis_dim = root["basis_dim"].as<int>();
    if (root["n_draws"]) c.n_draws = root["n_draws"].as<int>();
    if (root["seed"]) c.seed = root["seed"].as<std::uint64_t>();
    if (root["level"]) c.level = root["level"].as<double>();
    if (root["sate_variant"]) c.variant = parse_sate_variant(root["sate_variant"].as<std::string>());
    if (root["student_df"]) c.spec.copula.df = root["student_df"].as<double>();
    if (root["smooth_points"]) c.smooth_points = root["smooth_points"].as<int>();
    if (const auto ll = root["level_labels"]) {
      if (!ll.IsMap()) throw ConfigError("level_labels: expected a mapping");
      for (const auto& col : ll) {
        std::vector<std::pair<int, std::string>> labels;
        for (const auto& kv : col.second) labels.emplace_back(kv.first.as<int>(), kv.second.as<std::string>());
        c.spec.level_labels.emplace_back(col.first.as<std::string>(), labels);
      }
    }
    if (const auto rl = root["reference_levels"]) {
      if (!rl.IsMap()) throw ConfigError("reference_levels: expected a mapping");
      for (const auto& kv : rl) c.spec.reference_levels.emplace_back(kv.first.as<std::string>(), kv.second.as<int>());
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.spec.basis_dim < 3) throw ConfigError("basis_dim must be at least 3");
  if (c.n_draws < 10) throw ConfigError("n_draws must be at least 10");
  if (!(c.level > 0.0 && c.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (!(c.spec.copula.df > 2.0)) throw ConfigError("student_df must exceed 2");
  if (c.smooth_points < 2) throw ConfigError("smooth_points must be at least 2");
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AnalyzeConfig load_analyze_config(const std::string& path) { return parse_analyze_config(read_file(path)); }

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string Manifest::hash() const {
  std::string s = command + '\n' + config_hash + '\n' + std::to_string(seed) + '\n' + version + '\n';
  for (const auto& [k, v] : covariate_mapping) s += k + '=' + v + '\n';
  for (const auto& [k, v] : details) s += k + '=' + v + '\n';
  return hex64(fnv1a(s));
}

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

void write_table(const std::string& dir, const std::string& name, const Table& t, const std::string& manifest_hash) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir) / name;
  {
    std::ofstream csv(base.string() + ".csv");
    if (!csv) throw ConfigError("cannot write '" + base.string() + ".csv'");
    for (std::size_t j = 0; j < t.columns.size(); ++j) csv << (j ? "," : "") << t.columns[j];
    csv << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t j = 0; j < row.size(); ++j) csv << (j ? "," : "") << format_cell(row[j]);
      csv << "\n";
    }
  }
  nlohmann::ordered_json j;
  j["table"] = name;
  j["manifest_hash"] = manifest_hash;
  j["columns"] = t.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& c : row) {
      if (const auto* d = std::get_if<double>(&c)) {
        if (std::isfinite(*d)) {
          r.push_back(*d);
        } else {
          r.push_back(nullptr);
        }
      } else if (const auto* i = std::get_if<long long>(&c)) {
        r.push_back(*i);
      } else {
        r.push_back(std::get<std::string>(c));
      }
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  std::ofstream js(base.string() + ".json");
  js << j.dump(1) << "\n";
}

void write_manifest(const std::string& dir, const Manifest& m) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["manifest_hash"] = m.hash();
  auto map = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.covariate_mapping) map[k] = v;
  j["covariate_mapping"] = map;
  auto det = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.details) det[k] = v;
  j["details"] = det;
  j["started"] = m.started;
  j["finished"] = m.finished;
  std::ofstream out((std::filesystem::path(dir) / (m.command + "_manifest.json")).string());
  out << j.dump(1) << "\n";
}

}  // namespace copjoint
