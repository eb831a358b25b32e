#include "finsdet/connections.hpp"

#include <algorithm>
#include <cmath>

#include "finsdet/rng.hpp"

namespace finsdet {

namespace {

constexpr double kXStep = 1e-4;

// dg/dx^k at fixed y, central differences of the closed-form tensor.
std::vector<Mat> metric_x_derivatives(const RandersField& field, const Vec& x,
                                      const Vec& y, double h) {
  const int n = field.dim();
  std::vector<Mat> dg(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    dg[static_cast<size_t>(k)] =
        (fundamental_tensor(field, xp, y) - fundamental_tensor(field, xm, y)) /
        (2.0 * h);
  }
  return dg;
}

std::vector<Mat> metric_y_derivatives(const RandersField& field, const Vec& x,
                                      const Vec& y, double h) {
  const int n = field.dim();
  std::vector<Mat> dg(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vec yp = y, ym = y;
    yp(k) += h;
    ym(k) -= h;
    dg[static_cast<size_t>(k)] =
        (fundamental_tensor(field, x, yp) - fundamental_tensor(field, x, ym)) /
        (2.0 * h);
  }
  return dg;
}

Tensor3 christoffel_from(const std::vector<Mat>& dg, const Mat& g_inv, int n) {
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double acc = 0.0;
        for (int s = 0; s < n; ++s) {
          const double lower = dg[static_cast<size_t>(k)](s, j) -
                               dg[static_cast<size_t>(s)](j, k) +
                               dg[static_cast<size_t>(j)](s, k);
          acc += 0.5 * g_inv(i, s) * lower;
        }
        gamma(i, j, k) = acc;
        gamma(i, k, j) = acc;
      }
  return gamma;
}

struct PointData {
  int n = 0;
  double F = 0.0;
  Mat g, g_inv;
  Tensor3 A;         // lower indices
  Tensor3 A_up;      // A^i_jk = g^{il} A_ljk
  Tensor3 gamma;
  Mat N;
};

PointData point_data(const RandersField& field, const Vec& x, const Vec& y) {
  PointData d;
  d.n = field.dim();
  d.F = finsler_norm(field, x, y);
  d.g = fundamental_tensor(field, x, y);
  d.g_inv = d.g.inverse();
  d.A = cartan_tensor(field, x, y);
  d.A_up = Tensor3(d.n);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j)
      for (int k = 0; k < d.n; ++k) {
        double acc = 0.0;
        for (int l = 0; l < d.n; ++l) acc += d.g_inv(i, l) * d.A(l, j, k);
        d.A_up(i, j, k) = acc;
      }
  d.gamma = christoffel_from(metric_x_derivatives(field, x, y, kXStep),
                             d.g_inv, d.n);

  // N^i_j = gamma^i_jk y^k - A^i_jk gamma^k_rs y^r y^s / F
  Vec spray(d.n);
  for (int k = 0; k < d.n; ++k) {
    double acc = 0.0;
    for (int r = 0; r < d.n; ++r)
      for (int s = 0; s < d.n; ++s) acc += d.gamma(k, r, s) * y(r) * y(s);
    spray(k) = acc;
  }
  d.N = Mat::Zero(d.n, d.n);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d.n; ++k) acc += d.gamma(i, j, k) * y(k);
      for (int k = 0; k < d.n; ++k)
        acc -= d.A_up(i, j, k) * spray(k) / d.F;
      d.N(i, j) = acc;
    }
  return d;
}

}  // namespace

Tensor3 christoffel(const RandersField& field, const Vec& x, const Vec& y) {
  const Mat g = fundamental_tensor(field, x, y);
  return christoffel_from(metric_x_derivatives(field, x, y, kXStep),
                          g.inverse(), field.dim());
}

Mat nonlinear_connection(const RandersField& field, const Vec& x,
                         const Vec& y) {
  return point_data(field, x, y).N;
}

ConnectionBundle chern_connection(const RandersField& field, const Vec& x,
                                  const Vec& y, int residual_directions,
                                  uint64_t seed, double tolerance) {
  const PointData d = point_data(field, x, y);
  const int n = d.n;

  // horizontal derivatives of g: dg/dx^k - N^l_k * (2 A_ij l / F)
  const std::vector<Mat> dgx = metric_x_derivatives(field, x, y, kXStep);
  std::vector<Mat> dgh(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    Mat m = dgx[static_cast<size_t>(k)];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double corr = 0.0;
        for (int l = 0; l < n; ++l)
          corr += d.N(l, k) * 2.0 * d.A(i, j, l) / d.F;
        m(i, j) -= corr;
      }
    dgh[static_cast<size_t>(k)] = m;
  }

  ConnectionBundle bundle;
  bundle.x = x;
  bundle.y = y;
  bundle.gamma = d.gamma;
  bundle.nonlinear = d.N;
  bundle.chern = christoffel_from(dgh, d.g_inv, n);
  bundle.cartan_vertical = Tensor3(n);

  // Residuals of the structure equations, contracted against randomized
  // tangent directions. The g-derivatives here use an independent step so
  // the compatibility check does not just replay the solve.
  const double h2 = kXStep / 2.0;
  const std::vector<Mat> rx = metric_x_derivatives(field, x, y, h2);
  const std::vector<Mat> ry =
      metric_y_derivatives(field, x, y, h2 * std::max(1.0, y.norm()));

  double torsion = 0.0, compat = 0.0;
  Vec vx_prev = Vec::Zero(n);
  bool have_prev = false;
  for (int dir = 0; dir < residual_directions; ++dir) {
    RandomStream rs(seed, static_cast<uint64_t>(dir));
    Vec vx(n), vy(n);
    for (int k = 0; k < n; ++k) vx(k) = rs.uniform(-1.0, 1.0);
    for (int k = 0; k < n; ++k) vy(k) = rs.uniform(-1.0, 1.0);

    // torsion 2-form on consecutive direction pairs
    if (have_prev) {
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            acc += bundle.chern(i, j, k) *
                   (vx_prev(j) * vx(k) - vx(j) * vx_prev(k));
        torsion = std::max(torsion, std::abs(acc));
      }
    }
    vx_prev = vx;
    have_prev = true;

    // dg_ij(V) - g_kj w^k_i(V) - g_ik w^k_j(V) - 2 A_ijk dy^k(V)/F
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double dg = 0.0;
        for (int l = 0; l < n; ++l)
          dg += rx[static_cast<size_t>(l)](i, j) * vx(l) +
                ry[static_cast<size_t>(l)](i, j) * vy(l);
        double conn = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            conn += (d.g(k, j) * bundle.chern(k, i, l) +
                     d.g(i, k) * bundle.chern(k, j, l)) *
                    vx(l);
        double cart = 0.0;
        for (int k = 0; k < n; ++k) {
          double dy_k = vy(k);
          for (int l = 0; l < n; ++l) dy_k += d.N(k, l) * vx(l);
          cart += 2.0 * d.A(i, j, k) * dy_k / d.F;
        }
        compat = std::max(compat, std::abs(dg - conn - cart));
      }
  }
  bundle.torsion_residual = torsion;
  bundle.compatibility_residual = compat;
  bundle.within_tolerance = torsion <= tolerance && compat <= tolerance;
  return bundle;
}

ConnectionBundle cartan_connection(const RandersField& field, const Vec& x,
                                   const Vec& y, int residual_directions,
                                   uint64_t seed, double tolerance) {
  ConnectionBundle bundle =
      chern_connection(field, x, y, residual_directions, seed, tolerance);
  const PointData d = point_data(field, x, y);
  for (int k = 0; k < d.n; ++k)
    for (int i = 0; i < d.n; ++i)
      for (int j = 0; j < d.n; ++j)
        bundle.cartan_vertical(k, i, j) = d.A_up(k, i, j) / d.F;
  return bundle;
}

}  // namespace finsdet
