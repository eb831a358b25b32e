#include "finsdet/averaging.hpp"

#include <algorithm>
#include <cmath>

#include "finsdet/rng.hpp"

namespace finsdet {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

Vec unit_direction(RandomStream& rs, int n) {
  Vec u(n);
  double norm = 0.0;
  do {
    for (int d = 0; d < n; ++d) u(d) = rs.gaussian();
    norm = u.norm();
  } while (norm == 0.0);
  return u / norm;
}

// Density of the g-induced surface volume relative to the Euclidean angular
// measure at direction u: Gram determinant of a finite-difference tangent
// frame of the map u -> surface point.
double g_volume_density(const RandersField& field, const Vec& x, const Vec& u,
                        bool indicatrix) {
  const int n = field.dim();
  auto surface_point = [&](const Vec& dir) {
    const Vec un = dir / dir.norm();
    return indicatrix ? Vec(un / finsler_norm(field, x, un)) : un;
  };
  // orthonormal basis of u^perp via Householder of e1 -> u
  Mat basis(n, n - 1);
  {
    Vec w = u;
    w(0) += (u(0) >= 0.0 ? 1.0 : -1.0) * 1.0;
    w.normalize();
    Mat Q = Mat::Identity(n, n) - 2.0 * w * w.transpose();
    // column 0 of Q is +-u; the remaining columns span u^perp
    basis = Q.rightCols(n - 1);
  }
  const double h = 1e-5;
  Mat tangents(n, n - 1);
  for (int a = 0; a < n - 1; ++a) {
    const Vec up = u + h * basis.col(a);
    const Vec um = u - h * basis.col(a);
    tangents.col(a) = (surface_point(up) - surface_point(um)) / (2.0 * h);
  }
  const Vec y = surface_point(u);
  const Mat g = fundamental_tensor(field, x, y);
  const Mat gram = tangents.transpose() * g * tangents;
  const double det = gram.determinant();
  if (det <= 0.0)
    throw NumericalError("g-volume density: degenerate tangent frame");
  return std::sqrt(det);
}

struct Accumulator {
  explicit Accumulator(int k)
      : sw(0.0), swf(Vec::Zero(k)), sw2(0.0), sw2f(Vec::Zero(k)),
        sw2f2(Vec::Zero(k)), count(0) {}
  double sw;
  Vec swf;
  double sw2;
  Vec sw2f, sw2f2;
  long count;

  void add(double w, const Vec& f) {
    sw += w;
    swf += w * f;
    sw2 += w * w;
    sw2f += (w * w) * f;
    sw2f2 += (w * w) * f.cwiseProduct(f);
    ++count;
  }

  Vec mean() const { return swf / sw; }

  // delta-method standard error of the ratio estimator, entrywise
  Vec standard_error() const {
    Vec m = mean();
    Vec var = sw2f2 - 2.0 * sw2f.cwiseProduct(m) + sw2 * m.cwiseProduct(m);
    Vec se(m.size());
    const double denom = std::max<long>(count - 1, 1);
    for (int i = 0; i < m.size(); ++i) {
      const double v = std::max(var(i), 0.0) / denom;
      se(i) = std::sqrt(v * count) / sw;
    }
    return se;
  }
};

// Walks the integration surface, calling visit(y, base_weight) where
// base_weight carries the quadrature weight (1 for Monte Carlo draws).
// The psi weight and the optional g-volume density are applied by the
// caller through the returned per-point total weight.
template <typename Visit>
void for_each_surface_point(const RandersField& field, const Vec& x,
                            const AveragingScheme& scheme, Visit&& visit) {
  const int n = field.dim();
  const bool on_indicatrix = scheme.domain == AvgDomain::indicatrix;
  if (scheme.samples < 1) throw InputError("averaging: samples must be >= 1");

  auto point_of = [&](const Vec& u) {
    return on_indicatrix ? indicatrix_point(field, x, u) : Vec(u);
  };

  if (scheme.method == AvgMethod::monte_carlo) {
    for (long s = 0; s < scheme.samples; ++s) {
      RandomStream rs(scheme.seed, static_cast<uint64_t>(s));
      const Vec u = unit_direction(rs, n);
      visit(u, point_of(u), 1.0);
    }
    return;
  }

  // product quadrature: trapezoid per angle, periodic in the last angle
  if (n == 1) {
    for (double s : {1.0, -1.0}) {
      Vec u(1);
      u(0) = s;
      visit(u, point_of(u), 1.0);
    }
    return;
  }
  if (n == 2) {
    const long m = scheme.samples;
    for (long j = 0; j < m; ++j) {
      const double t = kTwoPi * static_cast<double>(j) / static_cast<double>(m);
      Vec u(2);
      u << std::cos(t), std::sin(t);
      visit(u, point_of(u), 1.0);
    }
    return;
  }
  if (n == 3 || n == 4) {
    const int angles = n - 1;
    const long per_axis = std::max<long>(
        4, std::lround(std::pow(static_cast<double>(scheme.samples),
                                1.0 / angles)));
    std::vector<long> sizes(static_cast<size_t>(angles), per_axis);
    // polar angles phi_a in [0, pi] (trapezoid), azimuth periodic
    std::vector<long> idx(static_cast<size_t>(angles), 0);
    while (true) {
      double w = 1.0;
      std::vector<double> phi(static_cast<size_t>(angles));
      for (int a = 0; a < angles; ++a) {
        const bool last = a == angles - 1;
        if (last) {
          phi[a] = kTwoPi * static_cast<double>(idx[a]) /
                   static_cast<double>(sizes[a]);
        } else {
          phi[a] = M_PI * static_cast<double>(idx[a]) /
                   static_cast<double>(sizes[a] - 1);
          if (idx[a] == 0 || idx[a] == sizes[a] - 1) w *= 0.5;
          // sin^(n-2-a) factor of the spherical volume element
          w *= std::pow(std::sin(phi[a]), n - 2 - a);
        }
      }
      Vec u(n);
      double sin_prod = 1.0;
      for (int a = 0; a < angles; ++a) {
        u(a) = sin_prod * std::cos(phi[static_cast<size_t>(a)]);
        sin_prod *= std::sin(phi[static_cast<size_t>(a)]);
      }
      u(n - 1) = sin_prod;
      if (w > 0.0 && u.norm() > 0.0) visit(u, point_of(u / u.norm()), w);

      int a = angles - 1;
      for (; a >= 0; --a) {
        if (++idx[a] < sizes[a]) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
    return;
  }
  throw InputError(
      "product quadrature is provided for dimensions up to 4; use "
      "monte_carlo beyond that");
}

// Weighted surface average of a vector-valued integrand.
template <typename F>
Accumulator average_components(const RandersField& field, const Vec& x,
                               const AveragingScheme& scheme, int k, F&& f) {
  Accumulator acc(k);
  const bool g_vol = scheme.measure == AvgMeasure::g_volume;
  const bool on_indicatrix = scheme.domain == AvgDomain::indicatrix;
  bool weight_seen_positive = false;

  for_each_surface_point(
      field, x, scheme, [&](const Vec& u, const Vec& y, double base_w) {
        double w = base_w;
        if (scheme.weight) {
          const double psi = scheme.weight(x, y);
          if (psi < 0.0)
            throw InputError("averaging: weight must be nonnegative");
          w *= psi;
        }
        if (g_vol) w *= g_volume_density(field, x, u, on_indicatrix);
        if (w > 0.0) weight_seen_positive = true;
        acc.add(w, f(y));
      });

  if (!weight_seen_positive || !(acc.sw > 0.0))
    throw InputError("averaging: weight vanishes on the whole surface");
  return acc;
}

}  // namespace

Vec indicatrix_point(const RandersField& field, const Vec& x, const Vec& u) {
  const double f = finsler_norm(field, x, u);
  if (f <= 0.0)
    throw NumericalError("indicatrix: F(x, u) <= 0, invalid structure at x = " +
                         format_point(x.data(), field.dim()));
  return u / f;
}

AveragedMetric average_metric(const RandersField& field, const Vec& x,
                              const AveragingScheme& scheme) {
  const int n = field.dim();
  const int k = n * (n + 1) / 2;
  Accumulator acc = average_components(
      field, x, scheme, k, [&](const Vec& y) {
        const Mat g = fundamental_tensor(field, x, y);
        Vec flat(k);
        int t = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) flat(t++) = g(i, j);
        return flat;
      });

  AveragedMetric out;
  out.x = x;
  out.h = Mat(n, n);
  out.se = Mat::Zero(n, n);
  const Vec mean = acc.mean();
  const Vec se = scheme.method == AvgMethod::monte_carlo
                     ? acc.standard_error()
                     : Vec(Vec::Zero(k));
  int t = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      out.h(i, j) = mean(t);
      out.h(j, i) = mean(t);
      out.se(i, j) = se(t);
      out.se(j, i) = se(t);
      ++t;
    }
  Eigen::SelfAdjointEigenSolver<Mat> eig(out.h);
  out.spd = eig.eigenvalues().minCoeff() > 0.0;
  return out;
}

AveragedHamiltonian average_hamiltonian(const RandersField& field, const Vec& x,
                                        const AveragingScheme& scheme) {
  const Vec beta = field.beta_at(x);
  double bound = 0.0;
  Accumulator acc = average_components(
      field, x, scheme, 1, [&](const Vec& p) {
        const double h = 2.0 * beta.dot(p);
        bound = std::max(bound, std::abs(h));
        Vec v(1);
        v(0) = h;
        return v;
      });
  AveragedHamiltonian out;
  out.value = acc.mean()(0);
  out.se = scheme.method == AvgMethod::monte_carlo ? acc.standard_error()(0)
                                                   : 0.0;
  out.bound = bound;
  return out;
}

HamiltonianSplit decompose_hamiltonian(const RandersField& field, const Vec& x,
                                       const AveragingScheme& scheme) {
  HamiltonianSplit split;
  split.mean = average_hamiltonian(field, x, scheme);
  const Vec beta = field.beta_at(x);
  const double mean = split.mean.value;
  split.fluctuation = [beta, mean](const Vec& p) {
    return 2.0 * beta.dot(p) - mean;
  };
  return split;
}

}  // namespace finsdet
