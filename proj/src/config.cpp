#include "finsdet/config.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "finsdet/json_out.hpp"

namespace finsdet {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::parse(const std::string& text, std::string origin) {
  Config cfg;
  cfg.raw_ = text;
  cfg.origin_ = std::move(origin);

  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                          ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    if (section.empty())
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": key outside any [section]");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": empty key");
    Entry e;
    e.value = trim(t.substr(eq + 1));
    e.line = line_no;
    auto [it, inserted] = cfg.sections_[section].emplace(key, std::move(e));
    if (!inserted)
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  Config cfg = parse(read_file(path), path);
  cfg.dir_ = std::filesystem::path(path).parent_path().string();
  return cfg;
}

bool Config::has_section(const std::string& name) const {
  return sections_.count(name) != 0;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) != 0;
}

const Config::Entry& Config::entry(const std::string& section,
                                   const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end())
    throw ConfigError(origin_ + ": missing section [" + section + "]");
  auto k = s->second.find(key);
  if (k == s->second.end())
    throw ConfigError(origin_ + ": missing key '" + key + "' in [" + section +
                      "]");
  k->second.read = true;
  return k->second;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
  return entry(section, key).value;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key,
                               const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  return entry(section, key).value;
}

long Config::get_int(const std::string& section, const std::string& key,
                     std::optional<long> fallback) const {
  if (!has(section, key)) {
    if (fallback) return *fallback;
    (void)entry(section, key);  // throws
  }
  const Entry& e = entry(section, key);
  char* end = nullptr;
  const long v = std::strtol(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0')
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + key +
                      "' is not an integer");
  return v;
}

double Config::get_double(const std::string& section, const std::string& key,
                          std::optional<double> fallback) const {
  if (!has(section, key)) {
    if (fallback) return *fallback;
    (void)entry(section, key);
  }
  const Entry& e = entry(section, key);
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end == e.value.c_str() || *end != '\0')
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + key +
                      "' is not a number");
  return v;
}

std::vector<double> Config::get_vector(const std::string& section,
                                       const std::string& key,
                                       int expected) const {
  const Entry& e = entry(section, key);
  std::istringstream in(e.value);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof())
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + key +
                      "' is not a list of numbers");
  if (expected >= 0 && static_cast<int>(v.size()) != expected)
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + key +
                      "' needs " + std::to_string(expected) + " entries, got " +
                      std::to_string(v.size()));
  return v;
}

void Config::reject_unknown_keys(const std::string& section) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return;
  for (const auto& [key, e] : s->second)
    if (!e.read)
      throw ConfigError(origin_ + ":" + std::to_string(e.line) +
                        ": unknown key '" + key + "' in [" + section + "]");
}

void Config::reject_unknown_sections(
    const std::vector<std::string>& known) const {
  for (const auto& [name, entries] : sections_) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == name;
    if (!ok)
      throw ConfigError(origin_ + ": unknown section [" + name + "]");
  }
}

namespace {

ScalarField field_entry(const Config& cfg, const std::string& section,
                        const std::string& key, int dim,
                        const std::string& fallback) {
  std::string spec = cfg.get_string(section, key, fallback);
  if (spec.rfind("@grid", 0) == 0) {
    std::string path = trim(spec.substr(5));
    if (path.empty())
      throw ConfigError(cfg.origin() + ": '" + key + "': @grid needs a path");
    if (!cfg.directory().empty() &&
        !std::filesystem::path(path).is_absolute())
      path = (std::filesystem::path(cfg.directory()) / path).string();
    GridData g = GridData::load(path);
    if (g.dim != dim)
      throw InputError(cfg.origin() + ": '" + key + "': grid dimension " +
                       std::to_string(g.dim) + " does not match field dim " +
                       std::to_string(dim));
    return ScalarField::tabulated(std::move(g));
  }
  try {
    return ScalarField::expression(spec, dim);
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.origin() + ": key '" + key + "': " + e.what());
  }
}

}  // namespace

RandersField field_from_config(const Config& cfg, const std::string& section) {
  const int dim = static_cast<int>(cfg.get_int(section, "dim"));
  if (dim < 1 || dim > 16)
    throw InputError(cfg.origin() + ": [" + section +
                     "] dim must be in 1..16");
  std::vector<double> lo = cfg.get_vector(section, "domain_min", dim);
  std::vector<double> hi = cfg.get_vector(section, "domain_max", dim);
  std::vector<bool> per(static_cast<size_t>(dim), false);
  if (cfg.has(section, "periodic")) {
    std::vector<double> p = cfg.get_vector(section, "periodic", dim);
    for (int d = 0; d < dim; ++d) per[static_cast<size_t>(d)] = p[d] != 0.0;
  }
  const double margin = cfg.get_double(section, "margin", 1e-6);

  std::vector<ScalarField> a;
  for (int i = 1; i <= dim; ++i)
    for (int j = i; j <= dim; ++j) {
      const std::string key =
          "a_" + std::to_string(i) + "_" + std::to_string(j);
      a.push_back(field_entry(cfg, section, key, dim, i == j ? "1" : "0"));
    }
  std::vector<ScalarField> beta;
  for (int i = 1; i <= dim; ++i)
    beta.push_back(
        field_entry(cfg, section, "beta_" + std::to_string(i), dim, "0"));

  return RandersField(dim, Box(std::move(lo), std::move(hi), std::move(per)),
                      std::move(a), std::move(beta), margin);
}

}  // namespace finsdet
