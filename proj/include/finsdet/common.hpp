#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace finsdet {

// Error families. The CLI maps each family to its own exit code (see README);
// library code throws these directly.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FieldInvalidError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned box in R^n, optionally periodic per axis. A periodic axis is
// identified modulo its extent; evaluation wraps instead of exiting.
struct Box {
  std::vector<double> lo, hi;
  std::vector<bool> periodic;  // empty means non-periodic everywhere

  Box() = default;
  Box(std::vector<double> lo_, std::vector<double> hi_)
      : lo(std::move(lo_)), hi(std::move(hi_)) {
    validate();
  }
  Box(std::vector<double> lo_, std::vector<double> hi_, std::vector<bool> per)
      : lo(std::move(lo_)), hi(std::move(hi_)), periodic(std::move(per)) {
    validate();
  }

  int dim() const { return static_cast<int>(lo.size()); }
  double extent(int axis) const { return hi[axis] - lo[axis]; }
  bool is_periodic(int axis) const {
    return !periodic.empty() && periodic[axis];
  }

  bool contains(const double* x, int n, double slack = 0.0) const {
    if (n != dim()) return false;
    for (int d = 0; d < n; ++d) {
      if (is_periodic(d)) continue;
      if (x[d] < lo[d] - slack || x[d] > hi[d] + slack) return false;
    }
    return true;
  }

  // Wraps periodic coordinates into [lo, hi).
  void wrap(double* x) const {
    for (int d = 0; d < dim(); ++d) {
      if (!is_periodic(d)) continue;
      const double w = extent(d);
      double t = x[d] - lo[d];
      t -= w * std::floor(t / w);
      x[d] = lo[d] + t;
    }
  }

 private:
  void validate() const {
    if (lo.size() != hi.size())
      throw InputError("domain box: lo/hi dimension mismatch");
    if (!periodic.empty() && periodic.size() != lo.size())
      throw InputError("domain box: periodic flag dimension mismatch");
    for (size_t d = 0; d < lo.size(); ++d)
      if (!(lo[d] < hi[d]))
        throw InputError("domain box: empty extent on axis " +
                         std::to_string(d + 1));
  }
};

inline std::string format_point(const double* x, int n) {
  std::string s = "(";
  char buf[40];
  for (int d = 0; d < n; ++d) {
    std::snprintf(buf, sizeof(buf), "%.6g", x[d]);
    s += buf;
    if (d + 1 < n) s += ", ";
  }
  return s + ")";
}

}  // namespace finsdet
