#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "finsdet/common.hpp"
#include "finsdet/expr.hpp"

namespace finsdet {

// Regular-grid tabulated scalar data with multilinear interpolation.
// Values are row-major with the last axis fastest. Points outside the grid
// box are clamped to it, so the interpolant is total.
struct GridData {
  int dim = 0;
  std::vector<int> shape;
  std::vector<double> origin, spacing;
  std::vector<double> values;

  // Text format: one header line
  //   dim n / shape k1..kn / origin o1..on / spacing s1..sn
  // followed by whitespace-separated values.
  static GridData parse(const std::string& text);
  static GridData load(const std::string& path);
  std::string serialize() const;

  double interpolate(std::span<const double> x) const;
};

// A scalar function of a point in R^n, backed by a parsed expression, a
// tabulated grid, or an arbitrary callable (composed fields use the latter).
class ScalarField {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  ScalarField() = default;

  static ScalarField constant(double c, int dim);
  static ScalarField expression(const std::string& source, int dim);
  static ScalarField expression(Expression e);
  static ScalarField tabulated(GridData grid);
  static ScalarField callable(Fn fn, int dim,
                              std::string describe = "<callable>");

  // Same field multiplied by a constant.
  ScalarField scaled(double factor) const;

  double operator()(std::span<const double> x) const;
  double operator()(const std::vector<double>& x) const {
    return (*this)(std::span<const double>(x.data(), x.size()));
  }

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }
  const std::string& describe() const { return describe_; }

 private:
  Fn fn_;
  int dim_ = 0;
  std::string describe_;
};

}  // namespace finsdet
