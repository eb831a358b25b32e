#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finsdet/common.hpp"
#include "finsdet/randers.hpp"

namespace finsdet {

// Line-oriented configuration with nested [section]s:
//
//   # comment
//   [field]
//   dim = 2
//   beta_1 = 0.5 * cos(x1)
//
// Values stay raw strings; typed access happens at lookup. Unknown keys are
// rejected when a section is consumed, so typos fail loudly.
class Config {
 public:
  static Config parse(const std::string& text, std::string origin = "<config>");
  static Config load(const std::string& path);

  bool has_section(const std::string& name) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  long get_int(const std::string& section, const std::string& key,
               std::optional<long> fallback = {}) const;
  double get_double(const std::string& section, const std::string& key,
                    std::optional<double> fallback = {}) const;
  std::vector<double> get_vector(const std::string& section,
                                 const std::string& key, int expected) const;

  // Marks every read key; call after consuming a section.
  void reject_unknown_keys(const std::string& section) const;
  void reject_unknown_sections(const std::vector<std::string>& known) const;

  const std::string& raw_text() const { return raw_; }
  const std::string& origin() const { return origin_; }
  const std::string& directory() const { return dir_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool read = false;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string raw_, origin_, dir_;

  const Entry& entry(const std::string& section, const std::string& key) const;
};

// Builds the Randers field described by a [field]-style section: dim,
// domain_min/domain_max, optional periodic flags and margin, metric entries
// a_i_j (upper triangle, identity where omitted) and one-form entries
// beta_i (zero where omitted). Entries are expressions over x1..xn or
// `@grid <path>` references resolved relative to the config file.
RandersField field_from_config(const Config& cfg, const std::string& section);

}  // namespace finsdet
