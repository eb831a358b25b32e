// Acceptance suite. Runs every criterion end to end and prints one
// [PASS]/[FAIL] line per criterion; exits nonzero if any fail.
//
// Usage: acceptance_tests <path-to-finsdet-cli> <configs-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "finsdet/averaging.hpp"
#include "finsdet/connections.hpp"
#include "finsdet/dynamics.hpp"
#include "finsdet/json_out.hpp"
#include "finsdet/randers.hpp"
#include "finsdet/rng.hpp"
#include "finsdet/spectral.hpp"

using namespace finsdet;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
  bool pass = true;
  std::string detail;
  double limit_seconds = 0.0;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
  void require_le(double value, double bound, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: %.3e > %.3e", what.c_str(), value,
                  bound);
    require(value <= bound, buf);
  }
};

void run_criterion(int index, const std::string& name, double limit_seconds,
                   const std::function<void(Criterion&)>& body) {
  Criterion c;
  c.limit_seconds = limit_seconds;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (seconds > limit_seconds) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "runtime %.1f s over the %.0f s limit",
                  seconds, limit_seconds);
    c.require(false, buf);
  }
  if (c.pass) {
    std::printf("[PASS] criterion %2d: %s (%.2f s)\n", index, name.c_str(),
                seconds);
  } else {
    std::printf("[FAIL] criterion %2d: %s (%.2f s) -- %s\n", index,
                name.c_str(), seconds, c.detail.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<long>(v.size()));
  long i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

RandersField constant_field(std::vector<double> beta, double lo = -2.0,
                            double hi = 2.0) {
  const int n = static_cast<int>(beta.size());
  std::vector<ScalarField> a;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      a.push_back(ScalarField::constant(i == j ? 1.0 : 0.0, n));
  std::vector<ScalarField> b;
  for (double v : beta) b.push_back(ScalarField::constant(v, n));
  return RandersField(n, Box(std::vector<double>(n, lo),
                             std::vector<double>(n, hi)),
                      std::move(a), std::move(b));
}

RandersField riemannian_2d() {
  std::vector<ScalarField> a = {
      ScalarField::expression("1 + 0.1*x1^2", 2),
      ScalarField::expression("0.05*x1*x2", 2),
      ScalarField::expression("1 + 0.05*x2^2", 2),
  };
  std::vector<ScalarField> b = {ScalarField::constant(0.0, 2),
                                ScalarField::constant(0.0, 2)};
  return RandersField(2, Box({-1, -1}, {1, 1}), std::move(a), std::move(b));
}

RandersField riemannian_3d() {
  std::vector<ScalarField> a = {
      ScalarField::expression("1 + 0.1*x1^2", 3),
      ScalarField::constant(0.0, 3),
      ScalarField::expression("0.05*x3", 3),
      ScalarField::expression("2 - 0.1*x2", 3),
      ScalarField::constant(0.0, 3),
      ScalarField::expression("1.5 + 0.05*x3^2", 3),
  };
  std::vector<ScalarField> b;
  for (int i = 0; i < 3; ++i) b.push_back(ScalarField::constant(0.0, 3));
  return RandersField(3, Box({-1, -1, -1}, {1, 1, 1}), std::move(a),
                      std::move(b));
}

RandersField randers_analytic_2d() {
  std::vector<ScalarField> a = {
      ScalarField::expression("1 + 0.1*x1^2", 2),
      ScalarField::expression("0.05*x1*x2", 2),
      ScalarField::expression("1 + 0.05*x2^2", 2),
  };
  std::vector<ScalarField> b = {
      ScalarField::expression("0.2*sin(x1)", 2),
      ScalarField::expression("0.1*cos(x2)", 2),
  };
  return RandersField(2, Box({-1, -1}, {1, 1}), std::move(a), std::move(b));
}

RandersField anisotropic_2d() {
  std::vector<ScalarField> a = {
      ScalarField::expression("1 + 0.05*x2^2", 2),
      ScalarField::expression("0.1*x1*x2", 2),
      ScalarField::constant(2.0, 2),
  };
  std::vector<ScalarField> b = {
      ScalarField::expression("0.1 + 0.05*x2", 2),
      ScalarField::constant(0.3, 2),
  };
  return RandersField(2, Box({-1, -1}, {1, 1}), std::move(a), std::move(b));
}

Vec random_point(const Box& box, uint64_t seed, uint64_t index,
                 double shrink = 0.0) {
  RandomStream rs(seed, index);
  Vec x(box.dim());
  for (int d = 0; d < box.dim(); ++d)
    x(d) = rs.uniform(box.lo[d] + shrink, box.hi[d] - shrink);
  return x;
}

Vec random_direction(int n, uint64_t seed, uint64_t index, double lo = 0.5,
                     double hi = 2.5) {
  RandomStream rs(seed ^ 0x5bf0, index);
  Vec y(n);
  double norm = 0.0;
  do {
    for (int d = 0; d < n; ++d) y(d) = rs.gaussian();
    norm = y.norm();
  } while (norm < 1e-12);
  return y * (rs.uniform(lo, hi) / norm);
}

// ---------------------------------------------------------------------------

void criterion_riemannian_reduction(Criterion& c) {
  for (const RandersField& field : {riemannian_2d(), riemannian_3d()}) {
    const int n = field.dim();
    double worst_g = 0.0, worst_a = 0.0, worst_h = 0.0, worst_ham = 0.0,
           worst_conn = 0.0;
    for (uint64_t i = 0; i < 20; ++i) {
      const Vec x = random_point(field.domain(), 101, i, 0.05);
      const Vec y = random_direction(n, 101, i);
      const Mat a = field.metric_at(x);
      worst_g = std::max(worst_g,
                         (fundamental_tensor(field, x, y) - a)
                             .cwiseAbs()
                             .maxCoeff());
      worst_a = std::max(worst_a, cartan_tensor(field, x, y).max_abs());
      const Vec p = random_direction(n, 103, i);
      worst_ham =
          std::max(worst_ham, std::abs(classical_hamiltonian(field, x, p)));
    }
    for (uint64_t i = 0; i < 5; ++i) {
      const Vec x = random_point(field.domain(), 107, i, 0.05);
      AveragingScheme s;
      s.method = AvgMethod::product_quadrature;
      s.samples = 1024;
      const AveragedMetric h = average_metric(field, x, s);
      c.require(h.spd, "averaged metric lost positive definiteness");
      worst_h = std::max(
          worst_h, (h.h - field.metric_at(x)).cwiseAbs().maxCoeff());

      const Vec y = random_direction(n, 109, i);
      const ConnectionBundle bundle = chern_connection(field, x, y);
      Tensor3 diff = bundle.chern;
      diff -= bundle.gamma;
      worst_conn = std::max(worst_conn, diff.max_abs());
    }
    c.require_le(worst_g, 1e-8, "g = a");
    c.require_le(worst_a, 1e-8, "A = 0");
    c.require_le(worst_h, 1e-8, "h = a");
    c.require_le(worst_ham, 1e-8, "H = 0");
    c.require_le(worst_conn, 1e-8, "Chern = Christoffel");
  }
}

void criterion_tensor_crosscheck(Criterion& c) {
  const RandersField fields[3] = {constant_field({0.5, 0.0}),
                                  randers_analytic_2d(), anisotropic_2d()};
  double worst = 0.0;
  for (int f = 0; f < 3; ++f) {
    const RandersField& field = fields[f];
    for (uint64_t i = 0; i < 34; ++i) {  // 102 samples over the 3 fields
      const Vec x = random_point(field.domain(), 211 + f, i, 0.05);
      const Vec y = random_direction(field.dim(), 211 + f, i);
      const Mat gc = fundamental_tensor(field, x, y, HessianMode::closed_form);
      const Mat gn =
          fundamental_tensor(field, x, y, HessianMode::numeric_hessian);
      const double scale = gc.cwiseAbs().maxCoeff();
      worst = std::max(worst, (gc - gn).cwiseAbs().maxCoeff() / scale);
    }
  }
  c.require_le(worst, 1e-5, "closed form vs numeric Hessian");
}

void criterion_homogeneity(Criterion& c) {
  const RandersField field = randers_analytic_2d();
  double worst_f = 0.0, worst_g = 0.0, worst_nf = 0.0;
  for (uint64_t i = 0; i < 25; ++i) {
    const Vec x = random_point(field.domain(), 307, i, 0.05);
    const Vec y = random_direction(2, 307, i);
    const double f1 = finsler_norm(field, x, y);
    const Mat g1 = fundamental_tensor(field, x, y);
    const Mat nf1 = nonlinear_connection(field, x, y) / f1;
    for (double lam : {0.5, 2.0, 10.0}) {
      const Vec ys = lam * y;
      worst_f = std::max(worst_f, std::abs(finsler_norm(field, x, ys) -
                                           lam * f1) /
                                      (lam * f1));
      worst_g = std::max(worst_g, (fundamental_tensor(field, x, ys) - g1)
                                      .cwiseAbs()
                                      .maxCoeff());
      const Mat nfs =
          nonlinear_connection(field, x, ys) / finsler_norm(field, x, ys);
      worst_nf = std::max(worst_nf, (nfs - nf1).cwiseAbs().maxCoeff());
    }
  }
  c.require_le(worst_f, 1e-8, "F(lam y) = lam F");
  c.require_le(worst_g, 1e-8, "g(lam y) = g");
  c.require_le(worst_nf, 1e-8, "N/F scale invariance");
}

void criterion_euler_identity(Criterion& c) {
  const RandersField fields[2] = {randers_analytic_2d(), anisotropic_2d()};
  double worst = 0.0;
  for (int f = 0; f < 2; ++f) {
    for (uint64_t i = 0; i < 50; ++i) {
      const Vec x = random_point(fields[f].domain(), 401 + f, i, 0.05);
      const Vec y = random_direction(2, 401 + f, i);
      const Tensor3 A = cartan_tensor(fields[f], x, y);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double acc = 0.0;
          for (int k = 0; k < 2; ++k) acc += A(a, b, k) * y(k);
          worst = std::max(worst, std::abs(acc));
        }
    }
  }
  c.require_le(worst, 1e-8, "A_ijk y^k = 0");
}

void criterion_chern_structure(Criterion& c) {
  const RandersField field = randers_analytic_2d();
  double worst_torsion = 0.0, worst_compat = 0.0, worst_vertical = 0.0;
  for (uint64_t i = 0; i < 20; ++i) {
    const Vec x = random_point(field.domain(), 503, i, 0.05);
    const Vec y = random_direction(2, 503, i);
    const ConnectionBundle chern = chern_connection(field, x, y);
    worst_torsion = std::max(worst_torsion, chern.torsion_residual);
    worst_compat = std::max(worst_compat, chern.compatibility_residual);

    // Cartan minus Chern must be the Cartan-tensor term by construction
    const ConnectionBundle cartan = cartan_connection(field, x, y);
    Tensor3 hdiff = cartan.chern;
    hdiff -= chern.chern;
    c.require(hdiff.max_abs() == 0.0, "Cartan/Chern horizontal parts differ");
    const double F = finsler_norm(field, x, y);
    const Mat ginv = fundamental_tensor(field, x, y).inverse();
    const Tensor3 A = cartan_tensor(field, x, y);
    for (int k = 0; k < 2; ++k)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double up = 0.0;
          for (int l = 0; l < 2; ++l) up += ginv(k, l) * A(l, a, b);
          worst_vertical =
              std::max(worst_vertical,
                       std::abs(cartan.cartan_vertical(k, a, b) - up / F));
        }
  }
  c.require_le(worst_torsion, 1e-6, "torsion residual");
  c.require_le(worst_compat, 1e-6, "compatibility residual");
  c.require_le(worst_vertical, 1e-14, "vertical addition = A/F");
}

void criterion_averaging(Criterion& c) {
  const RandersField field = randers_analytic_2d();

  // Monte Carlo vs quadrature within 3 sigma at a handful of points
  for (uint64_t i = 0; i < 5; ++i) {
    const Vec x = random_point(field.domain(), 601, i, 0.05);
    AveragingScheme q;
    q.method = AvgMethod::product_quadrature;
    q.samples = 4096;
    AveragingScheme m;
    m.method = AvgMethod::monte_carlo;
    m.samples = 100000;
    m.seed = 600 + i;
    const AveragedMetric hq = average_metric(field, x, q);
    const AveragedMetric hm = average_metric(field, x, m);
    c.require(hq.spd && hm.spd, "averaged metric lost positive definiteness");
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        c.require(std::abs(hq.h(a, b) - hm.h(a, b)) <=
                      3.0 * hm.se(a, b) + 1e-12,
                  "h: Monte Carlo vs quadrature beyond 3 sigma");
    const AveragedHamiltonian gq = average_hamiltonian(field, x, q);
    const AveragedHamiltonian gm = average_hamiltonian(field, x, m);
    c.require(std::abs(gq.value - gm.value) <= 3.0 * gm.se + 1e-12,
              "<H>: Monte Carlo vs quadrature beyond 3 sigma");
  }

  // SPD and the boundedness certificate at 50 random base points
  for (uint64_t i = 0; i < 50; ++i) {
    const Vec x = random_point(field.domain(), 607, i, 0.05);
    AveragingScheme q;
    q.method = AvgMethod::product_quadrature;
    q.samples = 1024;
    const AveragedMetric h = average_metric(field, x, q);
    c.require(h.spd, "averaged metric lost positive definiteness");
    const AveragedHamiltonian g = average_hamiltonian(field, x, q);
    c.require(std::abs(g.value) <= g.bound + 1e-12,
              "|<H>| exceeded 2 max |beta . p|");
  }
}

void criterion_flow(Criterion& c) {
  {  // constant drift straight line
    const RandersField field = constant_field({0.5, 0.0});
    const Trajectory traj = flow(field, vec({0.0, 0.0}), 1.0, 1e-3);
    c.require_le(std::abs(traj.states.back()(0) - 1.0), 1e-9,
                 "straight-line endpoint x1");
    c.require_le(std::abs(traj.states.back()(1)), 1e-9,
                 "straight-line endpoint x2");
    const BoundsReport r = bounds_check(field, traj);
    c.require(r.pass, "bounds report failed on the constant field");
    c.require(r.max_speed < 2.0, "speed bound violated");
  }
  {  // circle return time
    std::vector<ScalarField> a = {ScalarField::constant(1.0, 1)};
    std::vector<ScalarField> b = {ScalarField::constant(0.25, 1)};
    const RandersField circle(1, Box({0.0}, {2.0 * M_PI}, {true}),
                              std::move(a), std::move(b));
    const double expected = M_PI / 0.25;
    const Trajectory traj = flow(circle, vec({0.0}), expected * 1.05, 1e-3);
    const auto ret = first_return_time(traj, 2.0 * M_PI);
    c.require(ret.has_value(), "no return detected on the circle");
    if (ret)
      c.require_le(std::abs(*ret - expected) / expected, 1e-6,
                   "return period T = pi/b");
    const BoundsReport r = bounds_check(circle, traj);
    c.require(r.max_speed < 2.0, "speed bound violated on the circle");
  }
  {  // RK4 order
    std::vector<ScalarField> a = {ScalarField::constant(1.0, 1)};
    std::vector<ScalarField> b = {
        ScalarField::expression("0.2 + 0.1*sin(x1)", 1)};
    const RandersField wavy(1, Box({0.0}, {2.0 * M_PI}, {true}), std::move(a),
                            std::move(b));
    auto endpoint = [&](double dt) {
      return flow(wavy, vec({0.5}), 1.0, dt).states.back()(0);
    };
    const double ref = endpoint(0.05 / 64.0);
    const double e1 = std::abs(endpoint(0.05) - ref);
    const double e2 = std::abs(endpoint(0.025) - ref);
    c.require(e2 > 0.0, "degenerate RK4 error sample");
    if (e2 > 0.0) {
      const double ratio = e1 / e2;
      c.require(ratio >= 16.0 * 0.8 && ratio <= 16.0 * 1.2,
                "RK4 halving ratio outside 16 +- 20%: " +
                    std::to_string(ratio));
    }
    const Trajectory traj = flow(wavy, vec({0.5}), 10.0, 1e-2);
    const BoundsReport r = bounds_check(wavy, traj);
    c.require(r.max_speed < 2.0, "speed bound violated on the wavy field");
    c.require(r.pass, "bounds report failed on the wavy field");
  }
}

void criterion_max_acceleration(Criterion& c) {
  const double a = max_acceleration_estimate(1.0, 2.998e8, 1.616e-35);
  c.require(a >= 1e51 && a <= 1e53,
            "a_p not within a factor of 10 of 1e52 m/s^2");
}

void criterion_spectral(Criterion& c) {
  const ScalarField b_const = ScalarField::constant(0.5, 1);

  // linear divergence of the raw spectrum; stability of the compression
  double prev = 0.0;
  for (int n : {64, 128, 256}) {
    const GridModel model = GridModel::make(n);
    const SpectrumReport rep =
        averaged_operator_spectrum(model, b_const, nullptr, 8);
    c.require_le(std::abs(rep.raw_min + 2.0 * 0.5 * n / 2.0), 1e-8,
                 "raw minimum eigenvalue at N = " + std::to_string(n));
    if (prev != 0.0)
      c.require_le(std::abs(rep.averaged_min - prev) / std::abs(prev), 0.05,
                   "averaged minimum drift across N");
    prev = rep.averaged_min;
  }

  // time inversion (Nyquist-zeroed realization is exactly odd)
  const GridModel model = GridModel::make(128);
  const OperatorMatrix hz =
      build_hamiltonian_operator(model, b_const, NyquistMode::zeroed);
  c.require_le(time_inversion_residual(hz), 1e-12, "time-inversion residual");
  const OperatorMatrix hvz = build_hamiltonian_operator(
      model, ScalarField::expression("0.3 + 0.1*sin(x1)", 1),
      NyquistMode::zeroed);
  c.require_le(time_inversion_residual(hvz), 1e-12,
               "time-inversion residual, varying drift");

  // 't Hooft splits at the example size N = 32
  {
    const GridModel m32 = GridModel::make(32);
    const OperatorMatrix h = build_hamiltonian_operator(m32, b_const);
    OperatorMatrix rho;
    rho.m = CMat::Identity(32, 32);
    rho.hermitian = true;
    const SplitResult corr = thooft_split(h, rho, SplitForm::corrected);
    c.require_le(corr.difference_residual, 1e-10, "corrected split identity");
    c.require_le(corr.commutator, 1e-10, "[H1, H2], corrected");
    const SplitResult paper = thooft_split(h, rho, SplitForm::paper);
    c.require_le(paper.difference_residual, 1e-10,
                 "paper split equals rho H (rho = 1)");
    c.require_le(paper.commutator, 1e-10, "[H1, H2], paper");
    c.require(corr.min_eig_h1 >= -1e-10 && corr.min_eig_h2 >= -1e-10,
              "split parts lost positive semidefiniteness");
  }
  {
    // random commuting diagonal pair
    CMat hd = CMat::Zero(32, 32), rd = CMat::Zero(32, 32);
    RandomStream rs(907, 0);
    for (int i = 0; i < 32; ++i) {
      hd(i, i) = rs.uniform(-3.0, 3.0);
      rd(i, i) = rs.uniform(0.5, 2.0);
    }
    OperatorMatrix h{hd, true}, rho{rd, true};
    const SplitResult corr = thooft_split(h, rho, SplitForm::corrected);
    c.require_le(corr.difference_residual, 1e-10,
                 "corrected split identity, diagonal pair");
    c.require_le(corr.commutator, 1e-10, "[H1, H2], diagonal pair");
    const SplitResult paper = thooft_split(h, rho, SplitForm::paper);
    c.require_le(paper.difference_residual, 1e-10,
                 "paper split equals rho H, diagonal pair");
  }

  // periodic orbit return
  {
    const OperatorMatrix h = build_hamiltonian_operator(model, b_const);
    RandomStream rs(911, 0);
    CVec psi(model.size);
    for (int j = 0; j < model.size; ++j)
      psi(j) = std::complex<double>(rs.uniform(-1.0, 1.0),
                                    rs.uniform(-1.0, 1.0));
    psi.normalize();
    const CVec back = time_evolution(h, psi, M_PI / 0.5);
    c.require_le((back - psi).norm(), 1e-10, "U(T) psi = psi");
  }
}

void criterion_composition(Criterion& c) {
  {  // direct sum of x-dependent drifts: no cross terms
    std::vector<ScalarField> a1 = {ScalarField::constant(1.0, 1)};
    std::vector<ScalarField> b1 = {
        ScalarField::expression("0.3*sin(x1)", 1)};
    const RandersField f1(1, Box({-1.0}, {1.0}), std::move(a1),
                          std::move(b1));
    std::vector<ScalarField> a2 = {ScalarField::constant(1.0, 1)};
    std::vector<ScalarField> b2 = {
        ScalarField::expression("0.4*cos(x1)", 1)};
    const RandersField f2(1, Box({-1.0}, {1.0}), std::move(a2),
                          std::move(b2));
    const ComposedField sum = compose_direct_sum(f1, f2);
    c.require(sum.cross_term_magnitude == 0.0,
              "direct sum has cross contributions");
    c.require_le(cross_partial_max(sum.field, sum.split, 40, 1001), 1e-12,
                 "direct-sum Hamiltonian cross derivatives");
    const ValidationReport r = validate_randers(sum.field, 100, 1002);
    c.require(r.pass, "direct sum of small drifts failed validation");
  }
  {  // interacting composition of |beta| <= 0.4 inputs
    const RandersField f1 = constant_field({0.4, 0.0}, -1.0, 1.0);
    const RandersField f2 = constant_field({0.3, 0.1}, -1.0, 1.0);
    const ComposedField mix = compose_interacting(f1, f2, 200, 1003);
    c.require(mix.cross_term_magnitude > 0.0,
              "interacting composition lost its cross terms");
    const ValidationReport r = validate_randers(mix.field, 100, 1004);
    c.require(r.pass, "interacting composition failed validation");
  }
  {  // over-norm inputs are rejected
    const RandersField g1 = constant_field({0.8}, -1.0, 1.0);
    const RandersField g2 = constant_field({0.8}, -1.0, 1.0);
    bool rejected = false;
    try {
      compose_interacting(g1, g2);
    } catch (const FieldInvalidError&) {
      rejected = true;
    }
    c.require(rejected, "over-norm interacting composition not rejected");
  }
}

// ---------------------------------------------------------------------------
// criterion 11: CLI determinism over the bundled demo suite

struct SuiteStep {
  std::string verb;
  std::string config;
};

const std::vector<SuiteStep> kSuite = {
    {"validate", "riemann2d_validate.ini"},
    {"validate", "randers2d_validate.ini"},
    {"tensors", "tensors2d.ini"},
    {"connections", "connections2d.ini"},
    {"average", "average2d.ini"},
    {"flow", "flow_line.ini"},
    {"flow", "flow_circle.ini"},
    {"spectrum", "spectrum128.ini"},
    {"compose", "compose_pair.ini"},
};

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::map<std::string, std::string> primary_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > 10 && name.substr(name.size() - 10) == ".meta.json")
      continue;
    const bool json = name.size() > 5 &&
                      name.substr(name.size() - 5) == ".json";
    const bool csv = name.size() > 4 && name.substr(name.size() - 4) == ".csv";
    if (json || csv) out[name] = read_file(e.path().string());
  }
  return out;
}

void criterion_cli_determinism(Criterion& c, const std::string& cli,
                               const std::string& configs) {
  const fs::path base =
      fs::temp_directory_path() /
      ("finsdet_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const fs::path run1 = base / "run1";
  const fs::path run2 = base / "run2";

  for (const fs::path& dir : {run1, run2}) {
    fs::create_directories(dir);
    for (const SuiteStep& step : kSuite) {
      const int rc = run_cli(cli, step.verb + " --config " + configs + "/" +
                                      step.config + " --out " + dir.string() +
                                      " --seed 424242");
      c.require(rc == 0, step.verb + " on " + step.config +
                             " exited with code " + std::to_string(rc));
    }
    const int rc = run_cli(cli, "report --out " + dir.string());
    c.require(rc == 0, "report exited with code " + std::to_string(rc));
  }

  const auto files1 = primary_outputs(run1);
  const auto files2 = primary_outputs(run2);
  c.require(!files1.empty(), "suite produced no outputs");
  c.require(files1.size() == files2.size(),
            "runs produced different file sets");
  for (const auto& [name, bytes] : files1) {
    auto it = files2.find(name);
    c.require(it != files2.end(), "missing from the second run: " + name);
    if (it != files2.end())
      c.require(it->second == bytes, "byte mismatch in " + name);
  }

  // every aggregated check of the suite passed
  const auto summary_it = files1.find("summary.json");
  c.require(summary_it != files1.end(), "summary.json missing");
  if (summary_it != files1.end())
    c.require(summary_it->second.find("\"all_pass\": true") !=
                  std::string::npos,
              "suite summary reports failing checks");

  fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr,
                 "usage: acceptance_tests <finsdet-cli> <configs-dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const std::string configs = argv[2];

  std::printf("acceptance suite\n");
  run_criterion(1, "Riemannian reduction (2D and 3D)", 5.0,
                criterion_riemannian_reduction);
  run_criterion(2, "fundamental tensor vs numeric Hessian", 10.0,
                criterion_tensor_crosscheck);
  run_criterion(3, "homogeneity and scale invariance", 5.0,
                criterion_homogeneity);
  run_criterion(4, "Euler identity of the Cartan tensor", 5.0,
                criterion_euler_identity);
  run_criterion(5, "Chern structure equations", 30.0,
                criterion_chern_structure);
  run_criterion(6, "indicatrix averaging and boundedness", 60.0,
                criterion_averaging);
  run_criterion(7, "deterministic flow", 20.0, criterion_flow);
  run_criterion(8, "maximal acceleration estimate", 1.0,
                criterion_max_acceleration);
  run_criterion(9, "spectral contrast and 't Hooft splitting", 60.0,
                criterion_spectral);
  run_criterion(10, "composition constructions", 5.0, criterion_composition);
  run_criterion(11, "CLI determinism over the demo suite", 240.0,
                [&](Criterion& c) { criterion_cli_determinism(c, cli, configs); });

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
