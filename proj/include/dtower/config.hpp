#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dtower/potentials.hpp"

namespace dtower {

// A configuration problem tied to one key (flag name or section.key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + text + "'");
  }
}

}  // namespace detail

// Two-column CSV (s, V); a header line is skipped when it does not parse.
inline void load_table_csv(const std::string& path, std::vector<double>& s, std::vector<double>& v) {
  std::ifstream in(path);
  if (!in) throw ConfigError("potential.table", "cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("potential.table", "line " + std::to_string(lineno) + " lacks a comma");
    try {
      s.push_back(std::stod(line.substr(0, comma)));
      v.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      if (lineno == 1) continue;
      throw ConfigError("potential.table", "line " + std::to_string(lineno) + " is not numeric");
    }
  }
}

// "family:key=value,key=value". Presets: "bump" alone is the unit-maximum bump (r0 = 1, V(1) = 1),
// "bump-min" the unit-minimum bump; "table:path.csv" loads samples. A bn potential without N takes default_N.
inline PotentialPtr parse_potential(const std::string& text, const std::string& key = "potential",
                                    int default_N = 0) {
  const std::string t = detail::trim(text);
  if (t.empty()) throw ConfigError(key, "empty potential");
  const auto colon = t.find(':');
  const std::string family = t.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : t.substr(colon + 1);
  try {
    if (family == "bump" && rest.empty()) return unit_max_bump();
    if (family == "bump-min" && rest.empty()) return unit_min_bump();
    PotentialSpec spec;
    spec.family = family;
    if (family == "table") {
      if (rest.empty()) throw ConfigError(key, "table needs a file path");
      load_table_csv(rest, spec.table_s, spec.table_v);
      return make_potential(spec);
    }
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError(key, "expected key=value, got '" + item + "'");
      const std::string k = detail::trim(item.substr(0, eq));
      spec.params[k] = detail::parse_number(key + "." + k, detail::trim(item.substr(eq + 1)));
    }
    if (family == "bn" && !spec.params.count("N") && default_N > 0) spec.params["N"] = default_N;
    return make_potential(spec);
  } catch (const domain_error& e) {
    throw ConfigError(key, e.what());
  }
}

// Values read from an INI file; each field stays empty when the key is absent.
struct FileConfig {
  std::optional<int> N, k;
  std::optional<double> r, h, mu;
  std::optional<std::string> potential;
  std::optional<double> rel_tol;
  std::optional<std::uint64_t> mc_samples, seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out, format;
};

inline FileConfig load_config(const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", e.what());
  }
  static const std::map<std::string, std::vector<std::string>> known = {
      {"configuration", {"N", "k", "r", "h", "mu"}},
      {"potential", {"spec", "family", "a", "b", "c", "w", "lambda", "value", "table"}},
      {"tolerances", {"rel_tol", "mc_samples", "seed", "threads"}},
      {"output", {"path", "format"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw ConfigError(section, "unknown section");
    for (const auto& [key, value] : body) {
      bool ok = false;
      for (const auto& k : it->second) ok = ok || k == key;
      if (!ok) throw ConfigError(section + "." + key, "unknown key");
    }
  }
  FileConfig cfg;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return detail::trim(*v);
    return std::nullopt;
  };
  auto num = [&](const std::string& path) -> std::optional<double> {
    if (auto v = get(path)) return detail::parse_number(path, *v);
    return std::nullopt;
  };
  auto integer = [&](const std::string& path) -> std::optional<long long> {
    if (auto v = num(path)) {
      if (*v != double(static_cast<long long>(*v))) throw ConfigError(path, "must be an integer");
      return static_cast<long long>(*v);
    }
    return std::nullopt;
  };
  if (auto v = integer("configuration.N")) cfg.N = int(*v);
  if (auto v = integer("configuration.k")) cfg.k = int(*v);
  cfg.r = num("configuration.r");
  cfg.h = num("configuration.h");
  cfg.mu = num("configuration.mu");
  if (auto spec = get("potential.spec")) {
    cfg.potential = *spec;
  } else if (auto family = get("potential.family")) {
    if (*family == "table") {
      auto file = get("potential.table");
      if (!file) throw ConfigError("potential.table", "required for family table");
      cfg.potential = "table:" + *file;
    } else {
      std::string s = *family;
      bool first = true;
      for (const char* k : {"a", "b", "c", "w", "lambda", "value"}) {
        if (auto v = get(std::string("potential.") + k)) {
          s += (first ? ":" : ",") + std::string(k) + "=" + *v;
          first = false;
        }
      }
      cfg.potential = s;
    }
  }
  cfg.rel_tol = num("tolerances.rel_tol");
  if (auto v = integer("tolerances.mc_samples")) {
    if (*v < 0) throw ConfigError("tolerances.mc_samples", "must be nonnegative");
    cfg.mc_samples = std::uint64_t(*v);
  }
  if (auto v = get("tolerances.seed")) {
    try {
      cfg.seed = std::stoull(*v);
    } catch (const std::exception&) {
      throw ConfigError("tolerances.seed", "not an unsigned integer");
    }
  }
  if (auto v = integer("tolerances.threads")) {
    if (*v < 0) throw ConfigError("tolerances.threads", "must be nonnegative");
    cfg.threads = unsigned(*v);
  }
  cfg.out = get("output.path");
  cfg.format = get("output.format");
  if (cfg.format && *cfg.format != "json" && *cfg.format != "csv")
    throw ConfigError("output.format", "must be json or csv");
  return cfg;
}

}  // namespace dtower
