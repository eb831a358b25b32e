#include "finsdet/scalar_field.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace finsdet {

namespace {

std::vector<std::string> split_slashes(const std::string& line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == '/') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

GridData GridData::parse(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header))
    throw IoError("grid: missing header line");

  GridData g;
  for (const std::string& part : split_slashes(header)) {
    std::istringstream ps(part);
    std::string key;
    if (!(ps >> key)) throw IoError("grid: empty header section");
    if (key == "dim") {
      if (!(ps >> g.dim) || g.dim < 1)
        throw IoError("grid: bad dim in header");
    } else if (key == "shape") {
      int k;
      while (ps >> k) g.shape.push_back(k);
    } else if (key == "origin") {
      double v;
      while (ps >> v) g.origin.push_back(v);
    } else if (key == "spacing") {
      double v;
      while (ps >> v) g.spacing.push_back(v);
    } else {
      throw IoError("grid: unknown header section '" + key + "'");
    }
  }
  if (static_cast<int>(g.shape.size()) != g.dim ||
      static_cast<int>(g.origin.size()) != g.dim ||
      static_cast<int>(g.spacing.size()) != g.dim)
    throw IoError("grid: header shape/origin/spacing do not match dim");

  size_t count = 1;
  for (int d = 0; d < g.dim; ++d) {
    if (g.shape[d] < 2) throw IoError("grid: shape must be >= 2 per axis");
    if (!(g.spacing[d] > 0.0)) throw IoError("grid: spacing must be > 0");
    count *= static_cast<size_t>(g.shape[d]);
  }
  g.values.reserve(count);
  double v;
  while (in >> v) g.values.push_back(v);
  if (g.values.size() != count)
    throw IoError("grid: expected " + std::to_string(count) + " values, got " +
                  std::to_string(g.values.size()));
  return g;
}

GridData GridData::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("grid: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse(buf.str());
}

std::string GridData::serialize() const {
  std::ostringstream out;
  char buf[40];
  out << "dim " << dim << " / shape";
  for (int k : shape) out << ' ' << k;
  out << " / origin";
  for (double v : origin) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ' ' << buf;
  }
  out << " / spacing";
  for (double v : spacing) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ' ' << buf;
  }
  out << '\n';
  for (size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    out << buf << ((i + 1) % 8 == 0 ? '\n' : ' ');
  }
  out << '\n';
  return out.str();
}

double GridData::interpolate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim)
    throw InputError("grid: point dimension mismatch");

  // Per-axis cell index and fraction, clamped to the grid box.
  std::vector<int> i0(dim);
  std::vector<double> frac(dim);
  for (int d = 0; d < dim; ++d) {
    double t = (x[d] - origin[d]) / spacing[d];
    if (t < 0.0) t = 0.0;
    const double tmax = static_cast<double>(shape[d] - 1);
    if (t > tmax) t = tmax;
    int i = static_cast<int>(std::floor(t));
    if (i > shape[d] - 2) i = shape[d] - 2;
    i0[d] = i;
    frac[d] = t - i;
  }

  std::vector<size_t> stride(dim, 1);
  for (int d = dim - 2; d >= 0; --d)
    stride[d] = stride[d + 1] * static_cast<size_t>(shape[d + 1]);

  double acc = 0.0;
  const int corners = 1 << dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    size_t off = 0;
    for (int d = 0; d < dim; ++d) {
      const int hi = (c >> d) & 1;
      w *= hi ? frac[d] : (1.0 - frac[d]);
      off += stride[d] * static_cast<size_t>(i0[d] + hi);
    }
    acc += w * values[off];
  }
  return acc;
}

ScalarField ScalarField::constant(double c, int dim) {
  ScalarField f;
  f.fn_ = [c](std::span<const double>) { return c; };
  f.dim_ = dim;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", c);
  f.describe_ = buf;
  return f;
}

ScalarField ScalarField::expression(const std::string& source, int dim) {
  return expression(Expression::parse(source, dim));
}

ScalarField ScalarField::expression(Expression e) {
  ScalarField f;
  f.dim_ = e.dim();
  f.describe_ = e.source();
  f.fn_ = [expr = std::move(e)](std::span<const double> x) {
    return expr.eval(x);
  };
  return f;
}

ScalarField ScalarField::tabulated(GridData grid) {
  ScalarField f;
  f.dim_ = grid.dim;
  f.describe_ = "<grid " + std::to_string(grid.dim) + "d>";
  auto shared = std::make_shared<GridData>(std::move(grid));
  f.fn_ = [shared](std::span<const double> x) {
    return shared->interpolate(x);
  };
  return f;
}

ScalarField ScalarField::callable(Fn fn, int dim, std::string describe) {
  ScalarField f;
  f.fn_ = std::move(fn);
  f.dim_ = dim;
  f.describe_ = std::move(describe);
  return f;
}

ScalarField ScalarField::scaled(double factor) const {
  ScalarField f;
  f.dim_ = dim_;
  f.describe_ = std::to_string(factor) + "*(" + describe_ + ")";
  f.fn_ = [base = fn_, factor](std::span<const double> x) {
    return factor * base(x);
  };
  return f;
}

double ScalarField::operator()(std::span<const double> x) const {
  if (!fn_) throw NumericalError("scalar field: empty");
  return fn_(x);
}

}  // namespace finsdet
