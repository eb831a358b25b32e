#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "finsdet/common.hpp"

namespace finsdet {

// Deterministic JSON value for the primary output files: object keys are
// emitted sorted, floating-point numbers with 17 significant digits, so a
// given tree always serializes to the same bytes.
class Json {
 public:
  Json() : kind_(Kind::null) {}
  Json(bool b) : kind_(Kind::boolean), bool_(b) {}
  Json(int v) : kind_(Kind::integer), int_(v) {}
  Json(long v) : kind_(Kind::integer), int_(v) {}
  Json(long long v) : kind_(Kind::integer), int_(v) {}
  Json(unsigned long v) : kind_(Kind::integer), int_(static_cast<long long>(v)) {}
  Json(double v);
  Json(const char* s) : kind_(Kind::string), str_(s) {}
  Json(std::string s) : kind_(Kind::string), str_(std::move(s)) {}

  static Json object();
  static Json array();

  Json& set(const std::string& key, Json value);  // object only
  Json& push(Json value);                         // array only

  bool is_object() const { return kind_ == Kind::object; }
  bool is_array() const { return kind_ == Kind::array; }

  std::string dump(int indent = 1) const;

 private:
  enum class Kind { null, boolean, integer, real, string, object, array };
  void write(std::string& out, int indent, int depth) const;

  Kind kind_;
  bool bool_ = false;
  long long int_ = 0;
  double real_ = 0.0;
  std::string str_;
  std::map<std::string, Json> obj_;
  std::vector<Json> arr_;
};

// write-temp-then-rename
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// FNV-1a 64 of the bytes, hex.
std::string content_hash(const std::string& bytes);

}  // namespace finsdet
