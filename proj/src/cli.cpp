#include "finsdet/cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>  // nlohmann, used to read artifacts back

#include "finsdet/averaging.hpp"
#include "finsdet/config.hpp"
#include "finsdet/connections.hpp"
#include "finsdet/dynamics.hpp"
#include "finsdet/json_out.hpp"
#include "finsdet/randers.hpp"
#include "finsdet/rng.hpp"
#include "finsdet/spectral.hpp"

namespace fs = std::filesystem;

namespace finsdet {

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

struct Artifacts {
  std::string primary_name;                  // e.g. label.json
  std::map<std::string, std::string> files;  // name -> bytes
};

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push(v(i));
  return a;
}

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int j = 0; j < m.cols(); ++j) r.push(m(i, j));
    rows.push(r);
  }
  return rows;
}

Json tensor_json(const Tensor3& t) {
  Json out = Json::array();
  for (int i = 0; i < t.dim(); ++i) {
    Json plane = Json::array();
    for (int j = 0; j < t.dim(); ++j) {
      Json row = Json::array();
      for (int k = 0; k < t.dim(); ++k) row.push(t(i, j, k));
      plane.push(row);
    }
    out.push(plane);
  }
  return out;
}

Json check(const std::string& name, bool pass, double value,
           double tolerance) {
  Json c = Json::object();
  c.set("name", name);
  c.set("pass", pass);
  c.set("value", value);
  c.set("tolerance", tolerance);
  return c;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<long>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<long>(i)) = v[i];
  return out;
}

std::string sanitize_label(const std::string& s) {
  if (s.empty()) throw ConfigError("label must not be empty");
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      throw ConfigError("label may use only letters, digits, '-', '_'");
  return s;
}

// Weight expressions for `average` use x1..xn as the coordinates of the
// integration point; the base point is fixed by the verb.
AveragingScheme scheme_from_config(const Config& cfg, int dim,
                                   const CliOptions& opt) {
  AveragingScheme s;
  const std::string dom = cfg.get_string("average", "domain", "indicatrix");
  if (dom == "indicatrix")
    s.domain = AvgDomain::indicatrix;
  else if (dom == "sphere")
    s.domain = AvgDomain::sphere;
  else
    throw ConfigError("average.domain must be indicatrix or sphere");
  const std::string met = cfg.get_string("average", "method", "monte_carlo");
  if (met == "monte_carlo")
    s.method = AvgMethod::monte_carlo;
  else if (met == "quadrature")
    s.method = AvgMethod::product_quadrature;
  else
    throw ConfigError("average.method must be monte_carlo or quadrature");
  const std::string mea = cfg.get_string("average", "measure", "angular");
  if (mea == "angular")
    s.measure = AvgMeasure::euclidean_angular;
  else if (mea == "g_volume")
    s.measure = AvgMeasure::g_volume;
  else
    throw ConfigError("average.measure must be angular or g_volume");
  s.samples = opt.samples.value_or(cfg.get_int("average", "samples", 100000));
  s.seed = static_cast<uint64_t>(
      opt.seed.value_or(cfg.get_int("average", "seed", 0)));
  if (cfg.has("average", "weight")) {
    Expression e =
        Expression::parse(cfg.get_string("average", "weight"), dim);
    s.weight = [e](const Vec&, const Vec& y) { return e.eval(as_span(y)); };
  }
  return s;
}

// ---------------------------------------------------------------------------
// verbs

Artifacts run_validate(const Config& cfg, const CliOptions& opt,
                       const std::string& label) {
  const RandersField field = field_from_config(cfg, "field");
  const long samples =
      opt.samples.value_or(cfg.get_int("validate", "samples", 200));
  const uint64_t seed = static_cast<uint64_t>(
      opt.seed.value_or(cfg.get_int("validate", "seed", 0)));
  cfg.reject_unknown_keys("validate");

  const ValidationReport report =
      validate_randers(field, static_cast<int>(samples), seed);

  Json payload = Json::object();
  payload.set("pass", report.pass);
  payload.set("worst_norm", report.worst_norm);
  payload.set("min_eigenvalue", report.min_eigenvalue);
  payload.set("margin", field.margin());
  payload.set("sample_count", samples);
  if (!report.detail.empty()) payload.set("detail", report.detail);
  Json rows = Json::array();
  for (const auto& s : report.samples) {
    Json r = Json::object();
    r.set("x", vec_json(s.x));
    r.set("min_eigenvalue", s.min_eigenvalue);
    r.set("beta_norm", s.beta_norm);
    rows.push(r);
  }
  payload.set("samples", rows);

  Json checks = Json::array();
  checks.push(check("metric_spd", report.min_eigenvalue > 0.0,
                    report.min_eigenvalue, 0.0));
  checks.push(check("randers_condition",
                    report.worst_norm <= 1.0 - field.margin(),
                    report.worst_norm, 1.0 - field.margin()));
  payload.set("checks", checks);

  // spot check: one sampled point's norm, re-derivable from the config
  const ValidationSample& pick =
      report.samples[static_cast<size_t>(seed % report.samples.size())];
  Json spot = Json::object();
  spot.set("kind", "beta_norm");
  spot.set("x", vec_json(pick.x));
  spot.set("value", pick.beta_norm);
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  return out;
}

Artifacts run_eval(const Config& cfg, const CliOptions& opt,
                   const std::string& label) {
  (void)opt;
  const RandersField field = field_from_config(cfg, "field");
  const int n = field.dim();
  const Vec x = to_vec(cfg.get_vector("eval", "x", n));
  const Vec y = to_vec(cfg.get_vector("eval", "y", n));
  const bool with_dual = cfg.has("eval", "p");
  Vec p;
  if (with_dual) p = to_vec(cfg.get_vector("eval", "p", n));
  cfg.reject_unknown_keys("eval");

  const double f = finsler_norm(field, x, y);
  const double f2 = finsler_norm(field, x, Vec(2.0 * y));
  const double hom = std::abs(f2 - 2.0 * f) / std::max(1.0, std::abs(2.0 * f));

  Json payload = Json::object();
  payload.set("x", vec_json(x));
  payload.set("y", vec_json(y));
  payload.set("F", f);
  payload.set("homogeneity_residual", hom);
  Json checks = Json::array();
  checks.push(check("homogeneity", hom <= 1e-10, hom, 1e-10));
  if (with_dual) {
    const DualResult dual = legendre_dual(field, x, p);
    Json d = Json::object();
    d.set("p", vec_json(p));
    d.set("y_p", vec_json(dual.y_p));
    d.set("F_star", dual.f_star);
    d.set("residual", dual.residual);
    d.set("iterations", dual.iterations);
    payload.set("dual", d);
    checks.push(check("dual_residual", dual.residual <= 1e-10, dual.residual,
                      1e-10));
  }
  payload.set("checks", checks);

  Json spot = Json::object();
  spot.set("kind", "finsler_norm");
  spot.set("x", vec_json(x));
  spot.set("y", vec_json(y));
  spot.set("value", f);
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  return out;
}

Artifacts run_tensors(const Config& cfg, const CliOptions& opt,
                      const std::string& label) {
  (void)opt;
  const RandersField field = field_from_config(cfg, "field");
  const int n = field.dim();
  const Vec x = to_vec(cfg.get_vector("tensors", "x", n));
  const Vec y = to_vec(cfg.get_vector("tensors", "y", n));
  cfg.reject_unknown_keys("tensors");

  const FinslerSample s = finsler_sample(field, x, y);
  const Mat g_num = fundamental_tensor(field, x, y, HessianMode::numeric_hessian);

  double rel = 0.0;
  const double gmax = s.g.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rel = std::max(rel, std::abs(s.g(i, j) - g_num(i, j)) / gmax);

  double contraction = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += s.A(i, j, k) * y(k);
      contraction = std::max(contraction, std::abs(acc));
    }

  const Mat g3 = fundamental_tensor(field, x, Vec(3.0 * y));
  const double homog = (g3 - s.g).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat> eig(s.g);
  const double gmin = eig.eigenvalues().minCoeff();

  Json payload = Json::object();
  payload.set("x", vec_json(x));
  payload.set("y", vec_json(y));
  payload.set("F", s.F);
  payload.set("g", mat_json(s.g));
  payload.set("g_numeric", mat_json(g_num));
  payload.set("cartan", tensor_json(s.A));
  Json checks = Json::array();
  checks.push(check("g_spd", gmin > 0.0, gmin, 0.0));
  checks.push(check("closed_vs_numeric", rel <= 1e-5, rel, 1e-5));
  checks.push(check("cartan_contraction", contraction <= 1e-8, contraction,
                    1e-8));
  checks.push(check("g_zero_homogeneity", homog <= 1e-10, homog, 1e-10));
  payload.set("checks", checks);

  Json spot = Json::object();
  spot.set("kind", "g_entry");
  spot.set("x", vec_json(x));
  spot.set("y", vec_json(y));
  spot.set("i", 0);
  spot.set("j", 0);
  spot.set("value", s.g(0, 0));
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  return out;
}

Artifacts run_connections(const Config& cfg, const CliOptions& opt,
                          const std::string& label) {
  const RandersField field = field_from_config(cfg, "field");
  const int n = field.dim();
  const Vec x = to_vec(cfg.get_vector("connections", "x", n));
  const Vec y = to_vec(cfg.get_vector("connections", "y", n));
  const long dirs = cfg.get_int("connections", "directions", 20);
  const double tol = cfg.get_double("connections", "tolerance", 1e-6);
  const uint64_t seed = static_cast<uint64_t>(
      opt.seed.value_or(cfg.get_int("connections", "seed", 2026)));
  cfg.reject_unknown_keys("connections");

  const ConnectionBundle bundle =
      cartan_connection(field, x, y, static_cast<int>(dirs), seed, tol);

  double gamma_sym = 0.0, chern_sym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        gamma_sym = std::max(
            gamma_sym, std::abs(bundle.gamma(i, j, k) - bundle.gamma(i, k, j)));
        chern_sym = std::max(
            chern_sym, std::abs(bundle.chern(i, j, k) - bundle.chern(i, k, j)));
      }

  // N/F at y versus 2y
  const double f1 = finsler_norm(field, x, y);
  const double f2 = finsler_norm(field, x, Vec(2.0 * y));
  const Mat nf1 = nonlinear_connection(field, x, y) / f1;
  const Mat nf2 = nonlinear_connection(field, x, Vec(2.0 * y)) / f2;
  const double nf_gap = (nf1 - nf2).cwiseAbs().maxCoeff();

  Json payload = Json::object();
  payload.set("x", vec_json(x));
  payload.set("y", vec_json(y));
  payload.set("gamma", tensor_json(bundle.gamma));
  payload.set("nonlinear", mat_json(bundle.nonlinear));
  payload.set("chern", tensor_json(bundle.chern));
  payload.set("cartan_vertical", tensor_json(bundle.cartan_vertical));
  payload.set("torsion_residual", bundle.torsion_residual);
  payload.set("compatibility_residual", bundle.compatibility_residual);
  Json checks = Json::array();
  checks.push(check("gamma_symmetry", gamma_sym <= 1e-10, gamma_sym, 1e-10));
  checks.push(check("chern_symmetry", chern_sym <= 1e-10, chern_sym, 1e-10));
  checks.push(check("torsion_residual", bundle.torsion_residual <= tol,
                    bundle.torsion_residual, tol));
  checks.push(check("compatibility_residual",
                    bundle.compatibility_residual <= tol,
                    bundle.compatibility_residual, tol));
  checks.push(check("nf_scale_invariance", nf_gap <= 1e-8, nf_gap, 1e-8));
  payload.set("checks", checks);

  Json spot = Json::object();
  spot.set("kind", "gamma_entry");
  spot.set("x", vec_json(x));
  spot.set("y", vec_json(y));
  spot.set("value", bundle.gamma(0, 0, 0));
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  return out;
}

Artifacts run_average(const Config& cfg, const CliOptions& opt,
                      const std::string& label) {
  const RandersField field = field_from_config(cfg, "field");
  const int n = field.dim();
  const Vec x = to_vec(cfg.get_vector("average", "x", n));
  AveragingScheme scheme = scheme_from_config(cfg, n, opt);
  const bool crosscheck = cfg.get_int("average", "crosscheck", 0) != 0;
  const long crosscheck_nodes =
      cfg.get_int("average", "crosscheck_nodes", 4096);
  cfg.reject_unknown_keys("average");

  const AveragedMetric hm = average_metric(field, x, scheme);
  const AveragedHamiltonian ham = average_hamiltonian(field, x, scheme);
  const HamiltonianSplit split = decompose_hamiltonian(field, x, scheme);

  // average of the fluctuation over the same scheme
  const double mean = split.mean.value;
  AveragedHamiltonian fluct;
  {
    AveragedHamiltonian raw = average_hamiltonian(field, x, scheme);
    fluct.value = raw.value - mean;
    fluct.se = raw.se;
    fluct.bound = raw.bound + std::abs(mean);
  }

  Json payload = Json::object();
  payload.set("x", vec_json(x));
  payload.set("h", mat_json(hm.h));
  payload.set("h_stderr", mat_json(hm.se));
  payload.set("h_spd", hm.spd);
  Json hj = Json::object();
  hj.set("value", ham.value);
  hj.set("stderr", ham.se);
  hj.set("bound", ham.bound);
  payload.set("hamiltonian", hj);
  Json dj = Json::object();
  dj.set("mean", split.mean.value);
  dj.set("fluctuation_mean", fluct.value);
  payload.set("decomposition", dj);

  Json checks = Json::array();
  checks.push(check("h_spd", hm.spd, hm.spd ? 1.0 : 0.0, 0.0));
  checks.push(check("hamiltonian_bounded",
                    std::abs(ham.value) <= ham.bound + 1e-12,
                    std::abs(ham.value), ham.bound));
  const double fluct_tol = 3.0 * fluct.se + 1e-12;
  checks.push(check("fluctuation_mean_zero",
                    std::abs(fluct.value) <= fluct_tol, std::abs(fluct.value),
                    fluct_tol));

  if (crosscheck) {
    AveragingScheme other = scheme;
    other.method = scheme.method == AvgMethod::monte_carlo
                       ? AvgMethod::product_quadrature
                       : AvgMethod::monte_carlo;
    other.samples = other.method == AvgMethod::product_quadrature
                        ? crosscheck_nodes
                        : std::max<long>(scheme.samples, 100000);
    const AveragedMetric hm2 = average_metric(field, x, other);
    const AveragedHamiltonian ham2 = average_hamiltonian(field, x, other);
    const Mat se = scheme.method == AvgMethod::monte_carlo ? hm.se : hm2.se;
    const double hse = scheme.method == AvgMethod::monte_carlo ? ham.se
                                                               : ham2.se;
    double worst_sigma = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double gap = std::abs(hm.h(i, j) - hm2.h(i, j));
        worst_sigma = std::max(worst_sigma, gap / (3.0 * se(i, j) + 1e-12));
      }
    const double hgap =
        std::abs(ham.value - ham2.value) / (3.0 * hse + 1e-12);
    Json cj = Json::object();
    cj.set("h_other", mat_json(hm2.h));
    cj.set("hamiltonian_other", ham2.value);
    payload.set("crosscheck", cj);
    checks.push(
        check("crosscheck_h_3sigma", worst_sigma <= 1.0, worst_sigma, 1.0));
    checks.push(
        check("crosscheck_hamiltonian_3sigma", hgap <= 1.0, hgap, 1.0));
  }
  payload.set("checks", checks);

  // spot check: the metric integrand at a fixed direction
  Vec u = Vec::Zero(n);
  u(0) = 1.0;
  const Vec yq = indicatrix_point(field, x, u);
  Json spot = Json::object();
  spot.set("kind", "indicatrix_g_entry");
  spot.set("x", vec_json(x));
  spot.set("u", vec_json(u));
  spot.set("value", fundamental_tensor(field, x, yq)(0, 0));
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  return out;
}

Artifacts run_flow(const Config& cfg, const CliOptions& opt,
                   const std::string& label) {
  (void)opt;
  const RandersField field = field_from_config(cfg, "field");
  const int n = field.dim();
  const Vec x0 = to_vec(cfg.get_vector("flow", "x0", n));
  const double t_final = cfg.get_double("flow", "t_final");
  const double dt = cfg.get_double("flow", "dt");
  cfg.reject_unknown_keys("flow");

  const Trajectory traj = flow(field, x0, t_final, dt);
  const BoundsReport bounds = bounds_check(field, traj);

  std::string csv = "t";
  for (int d = 1; d <= n; ++d) csv += ",x" + std::to_string(d);
  for (int d = 1; d <= n; ++d) csv += ",v" + std::to_string(d);
  csv += "\n";
  for (size_t k = 0; k < traj.times.size(); ++k) {
    csv += csv_num(traj.times[k]);
    for (int d = 0; d < n; ++d) csv += "," + csv_num(traj.states[k](d));
    for (int d = 0; d < n; ++d) csv += "," + csv_num(traj.velocities[k](d));
    csv += "\n";
  }

  Json payload = Json::object();
  payload.set("x0", vec_json(x0));
  payload.set("t_final", t_final);
  payload.set("dt", dt);
  payload.set("steps", static_cast<long>(traj.times.size()));
  payload.set("exited_domain", traj.exited_domain);
  payload.set("endpoint", vec_json(traj.states.back()));
  payload.set("endpoint_time", traj.times.back());
  Json bj = Json::object();
  bj.set("max_speed", bounds.max_speed);
  bj.set("speed_bound", bounds.speed_bound);
  bj.set("max_acceleration", bounds.max_acceleration);
  bj.set("acceleration_bound", bounds.acceleration_bound);
  bj.set("pass", bounds.pass);
  payload.set("bounds", bj);
  if (n == 1 && field.domain().is_periodic(0)) {
    const auto ret = first_return_time(traj, field.domain().extent(0));
    if (ret) payload.set("return_time", *ret);
  }

  Json checks = Json::array();
  checks.push(check("bounds_pass", bounds.pass, bounds.max_speed,
                    bounds.speed_bound));
  checks.push(check("speed_below_2", bounds.max_speed < 2.0, bounds.max_speed,
                    2.0));
  payload.set("checks", checks);

  Json spot = Json::object();
  spot.set("kind", "velocity_component");
  spot.set("x", vec_json(traj.states.back()));
  spot.set("value", traj.velocities.back()(0));
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  out.files[label + ".csv"] = csv;
  return out;
}

Artifacts run_spectrum(const Config& cfg, const CliOptions& opt,
                       const std::string& label) {
  const RandersField field = field_from_config(cfg, "field");
  if (field.dim() != 1)
    throw InputError("spectrum: the grid model is 1D; use a dim = 1 field");
  const ScalarField beta = field.beta_entry(0);
  const long n = cfg.get_int("spectrum", "n", 128);
  const double period =
      cfg.get_double("spectrum", "l", 6.283185307179586476925287);
  const long k0 = cfg.get_int("spectrum", "k0", 8);
  const std::string nys = cfg.get_string("spectrum", "nyquist", "asymmetric");
  const std::string split_mode = cfg.get_string("spectrum", "split", "both");
  const std::string rho_kind = cfg.get_string("spectrum", "rho", "identity");
  const double rho_scale = cfg.get_double("spectrum", "rho_scale", 0.5);
  const uint64_t seed = static_cast<uint64_t>(
      opt.seed.value_or(cfg.get_int("spectrum", "seed", 5)));
  cfg.reject_unknown_keys("spectrum");

  NyquistMode nyquist;
  if (nys == "asymmetric")
    nyquist = NyquistMode::asymmetric;
  else if (nys == "zeroed")
    nyquist = NyquistMode::zeroed;
  else
    throw ConfigError("spectrum.nyquist must be asymmetric or zeroed");

  const GridModel model = GridModel::make(static_cast<int>(n), period);
  const OperatorMatrix h = build_hamiltonian_operator(model, beta, nyquist);
  const OperatorMatrix h_zeroed =
      build_hamiltonian_operator(model, beta, NyquistMode::zeroed);

  const SpectrumReport report = averaged_operator_spectrum(
      model, beta, nullptr, static_cast<int>(k0), nyquist);

  const double herm =
      (h.m - h.m.adjoint()).cwiseAbs().maxCoeff() /
      std::max(1.0, h.m.cwiseAbs().maxCoeff());
  const double tinv_asym = time_inversion_residual(h);
  const double tinv_zeroed = time_inversion_residual(h_zeroed);

  // bounded spectrum certificate for the shell compression
  double beta_sup = 0.0;
  for (double xj : model.xs) {
    const double v = beta(std::span<const double>(&xj, 1));
    beta_sup = std::max(beta_sup, std::abs(v));
  }
  const double k_tilde =
      6.283185307179586476925287 * static_cast<double>(k0) / period;
  const double avg_bound = 2.0 * k_tilde * beta_sup;

  Json payload = Json::object();
  payload.set("n", n);
  payload.set("l", period);
  payload.set("k0", k0);
  payload.set("nyquist", nys);
  Json rawj = Json::object();
  rawj.set("min", report.raw_min);
  rawj.set("max", report.raw_max);
  payload.set("raw", rawj);
  Json avgj = Json::object();
  avgj.set("min", report.averaged_min);
  avgj.set("max", report.averaged_max);
  avgj.set("bound", avg_bound);
  payload.set("averaged", avgj);
  payload.set("hermiticity_residual", herm);
  Json tj = Json::object();
  tj.set("asymmetric", tinv_asym);
  tj.set("zeroed", tinv_zeroed);
  payload.set("time_inversion_residual", tj);

  Json checks = Json::array();
  checks.push(check("hermitian", herm <= 1e-12, herm, 1e-12));
  checks.push(
      check("time_inversion_zeroed", tinv_zeroed <= 1e-12, tinv_zeroed, 1e-12));
  checks.push(check("averaged_min_bounded",
                    report.averaged_min >= -avg_bound - 1e-9,
                    report.averaged_min, avg_bound));

  // split on the spectrally normalized Hamiltonian; identities are scale
  // covariant and the fixed tolerances stay meaningful at any N
  if (split_mode != "none") {
    Eigen::SelfAdjointEigenSolver<CMat> eig(h.m);
    const double hnorm = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(),
                                  1e-300);
    OperatorMatrix hn;
    hn.m = h.m / hnorm;
    hn.hermitian = true;
    OperatorMatrix rho;
    if (rho_kind == "identity") {
      rho.m = CMat::Identity(model.size, model.size);
    } else if (rho_kind == "h_quadratic") {
      rho.m = CMat::Identity(model.size, model.size) +
              rho_scale * (hn.m * hn.m);
    } else {
      throw ConfigError("spectrum.rho must be identity or h_quadratic");
    }
    rho.hermitian = true;
    payload.set("split_scale", hnorm);
    Json sj = Json::object();
    const std::vector<std::string> forms =
        split_mode == "both" ? std::vector<std::string>{"paper", "corrected"}
                             : std::vector<std::string>{split_mode};
    for (const std::string& form_name : forms) {
      const SplitForm form = form_name == "paper" ? SplitForm::paper
                                                  : SplitForm::corrected;
      const SplitResult split = thooft_split(hn, rho, form);
      Json fj = Json::object();
      fj.set("difference_residual", split.difference_residual);
      fj.set("commutator", split.commutator);
      fj.set("min_eig_h1", split.min_eig_h1);
      fj.set("min_eig_h2", split.min_eig_h2);
      sj.set(form_name, fj);
      checks.push(check("split_identity_" + form_name,
                        split.difference_residual <= 1e-10,
                        split.difference_residual, 1e-10));
      checks.push(check("split_commutator_" + form_name,
                        split.commutator <= 1e-10, split.commutator, 1e-10));
      checks.push(check("split_psd_" + form_name,
                        std::min(split.min_eig_h1, split.min_eig_h2) >= -1e-10,
                        std::min(split.min_eig_h1, split.min_eig_h2), -1e-10));
    }
    payload.set("split", sj);
  }

  // evolution checks
  {
    const double dt_small = 1e-3;
    const CMat u = evolution_operator(h, dt_small);
    const CMat approx = CMat::Identity(model.size, model.size) -
                        std::complex<double>(0.0, dt_small) * h.m;
    Eigen::SelfAdjointEigenSolver<CMat> eig(h.m);
    const double hnorm =
        std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    const double first_order =
        (u - approx).cwiseAbs().maxCoeff() / (hnorm * hnorm);
    const double unitarity =
        (u * u.adjoint() - CMat::Identity(model.size, model.size))
            .cwiseAbs()
            .maxCoeff();
    Json ej = Json::object();
    ej.set("first_order_residual", first_order);
    ej.set("unitarity_residual", unitarity);
    checks.push(check("evolution_first_order", first_order <= dt_small * dt_small,
                      first_order, dt_small * dt_small));
    checks.push(check("evolution_unitary", unitarity <= 1e-10, unitarity,
                      1e-10));

    // constant drift has the exact period pi / b
    double bmin = 1e300, bmax = -1e300;
    for (double xj : model.xs) {
      const double v = beta(std::span<const double>(&xj, 1));
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (bmax - bmin <= 1e-14 && std::abs(bmax) > 1e-12 &&
        std::abs(period - 6.283185307179586476925287) <= 1e-12) {
      const double T = M_PI / bmax;
      RandomStream rs(seed, 0);
      CVec psi(model.size);
      for (int j = 0; j < model.size; ++j)
        psi(j) = std::complex<double>(rs.uniform(-1.0, 1.0),
                                      rs.uniform(-1.0, 1.0));
      psi.normalize();
      const CVec back = time_evolution(h, psi, T);
      const double ret = (back - psi).norm();
      ej.set("period", T);
      ej.set("period_return_residual", ret);
      checks.push(check("periodic_return", ret <= 1e-10, ret, 1e-10));
    }
    payload.set("evolution", ej);
  }
  payload.set("checks", checks);

  std::string csv = "index,eigenvalue\n";
  for (size_t i = 0; i < report.raw.size(); ++i)
    csv += std::to_string(i) + "," + csv_num(report.raw[i]) + "\n";
  std::string csv_avg = "index,eigenvalue\n";
  for (size_t i = 0; i < report.averaged.size(); ++i)
    csv_avg += std::to_string(i) + "," + csv_num(report.averaged[i]) + "\n";

  Json spot = Json::object();
  spot.set("kind", "hamiltonian_entry");
  spot.set("j", 0);
  spot.set("l", 1);
  spot.set("re", h.m(0, 1).real());
  spot.set("im", h.m(0, 1).imag());
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  out.files[label + ".csv"] = csv;
  out.files[label + "_averaged.csv"] = csv_avg;
  return out;
}

Artifacts run_compose(const Config& cfg, const CliOptions& opt,
                      const std::string& label) {
  const RandersField f1 = field_from_config(cfg, "field");
  const RandersField f2 = field_from_config(cfg, "field2");
  const std::string mode = cfg.get_string("compose", "mode");
  const long samples = opt.samples.value_or(cfg.get_int("compose", "samples", 200));
  const uint64_t seed = static_cast<uint64_t>(
      opt.seed.value_or(cfg.get_int("compose", "seed", 0)));
  cfg.reject_unknown_keys("compose");

  ComposedField composed = [&] {
    if (mode == "direct_sum") return compose_direct_sum(f1, f2);
    if (mode == "interacting")
      return compose_interacting(f1, f2, static_cast<int>(samples), seed);
    throw ConfigError("compose.mode must be direct_sum or interacting");
  }();

  const ValidationReport report =
      validate_randers(composed.field, static_cast<int>(samples), seed);
  const double cross_partial =
      cross_partial_max(composed.field, composed.split,
                        static_cast<int>(std::min<long>(samples, 50)), seed);

  Json payload = Json::object();
  payload.set("mode", mode);
  payload.set("dim", composed.field.dim());
  payload.set("split", composed.split);
  payload.set("valid", report.pass);
  payload.set("worst_norm", report.worst_norm);
  payload.set("cross_partial_max", cross_partial);
  payload.set("cross_term_magnitude", composed.cross_term_magnitude);

  Json checks = Json::array();
  if (mode == "direct_sum") {
    checks.push(check("no_cross_terms", cross_partial <= 1e-12, cross_partial,
                      1e-12));
    checks.push(check("no_cross_contributions",
                      composed.cross_term_magnitude == 0.0,
                      composed.cross_term_magnitude, 0.0));
  } else {
    checks.push(check("cross_contributions_present",
                      composed.cross_term_magnitude > 0.0,
                      composed.cross_term_magnitude, 0.0));
  }
  checks.push(check("composed_valid", report.pass, report.worst_norm,
                    1.0 - composed.field.margin()));
  payload.set("checks", checks);

  const Vec xs = sample_domain_point(composed.field.domain(), seed, 7);
  Json spot = Json::object();
  spot.set("kind", "composed_beta");
  spot.set("x", vec_json(xs));
  spot.set("mode", mode);
  spot.set("value", composed.field.beta_at(xs)(0));
  payload.set("spot_check", spot);

  Artifacts out;
  out.primary_name = label + ".json";
  out.files["__payload__"] = payload.dump();
  return out;
}

// ---------------------------------------------------------------------------
// report

int run_report(const CliOptions& opt) {
  if (opt.out_dir.empty()) throw InputError("report: --out is required");
  std::vector<std::string> names;
  if (fs::exists(opt.out_dir))
    for (const auto& e : fs::directory_iterator(opt.out_dir)) {
      if (!e.is_regular_file()) continue;
      const std::string name = e.path().filename().string();
      if (name.size() < 6 || name.substr(name.size() - 5) != ".json") continue;
      if (name == "summary.json") continue;
      if (name.size() > 10 &&
          name.substr(name.size() - 10) == ".meta.json")
        continue;
      names.push_back(name);
    }
  std::sort(names.begin(), names.end());

  Json artifacts = Json::object();
  Json errors = Json::array();
  bool all_pass = true;
  int count = 0;
  int error_count = 0;
  for (const std::string& name : names) {
    try {
      const std::string bytes = read_file(opt.out_dir + "/" + name);
      const nlohmann::json j = nlohmann::json::parse(bytes);
      Json entry = Json::object();
      entry.set("verb", j.value("verb", std::string("?")));
      entry.set("config_hash", j.value("config_hash", std::string("?")));
      bool pass = true;
      Json checks = Json::array();
      if (j.contains("checks"))
        for (const auto& c : j["checks"]) {
          const bool ok = c.value("pass", false);
          pass = pass && ok;
          Json cj = Json::object();
          cj.set("name", c.value("name", std::string("?")));
          cj.set("pass", ok);
          if (c.contains("value") && c["value"].is_number())
            cj.set("value", c["value"].get<double>());
          if (c.contains("tolerance") && c["tolerance"].is_number())
            cj.set("tolerance", c["tolerance"].get<double>());
          checks.push(cj);
        }
      entry.set("checks", checks);
      entry.set("pass", pass);
      all_pass = all_pass && pass;
      artifacts.set(name.substr(0, name.size() - 5), entry);
      ++count;
    } catch (const std::exception& e) {
      Json err = Json::object();
      err.set("artifact", name);
      err.set("error", std::string(e.what()));
      errors.push(err);
      ++error_count;
    }
  }

  Json summary = Json::object();
  summary.set("schema_version", kSchemaVersion);
  summary.set("tool_version", kToolVersion);
  summary.set("artifact_count", count);
  summary.set("artifacts", artifacts);
  summary.set("errors", errors);
  summary.set("all_pass", all_pass && count > 0);

  fs::create_directories(opt.out_dir);
  write_file_atomic(opt.out_dir + "/summary.json", summary.dump());
  if (count == 0) {
    std::cerr << "report: no artifacts in '" << opt.out_dir << "'\n";
    return kNoArtifacts;
  }
  if (error_count > 0) {
    std::cerr << "report: " << error_count
              << " artifact(s) could not be read; partial summary written\n";
    return kIo;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// spot-check verification for cache hits

bool verify_spot_check(const std::string& verb, const Config& cfg,
                       const nlohmann::json& primary) {
  if (!primary.contains("spot_check")) return false;
  const nlohmann::json& spot = primary["spot_check"];
  const std::string kind = spot.value("kind", std::string());
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  auto spot_vec = [&](const char* key) {
    std::vector<double> v = spot.at(key).get<std::vector<double>>();
    return to_vec(v);
  };

  try {
    if (kind == "beta_norm") {
      const RandersField field = field_from_config(cfg, "field");
      const Vec x = spot_vec("x");
      const Mat a = field.metric_at(x);
      const Vec b = field.beta_at(x);
      return close(std::sqrt(b.dot(a.ldlt().solve(b))),
                   spot.at("value").get<double>());
    }
    if (kind == "finsler_norm") {
      const RandersField field = field_from_config(cfg, "field");
      return close(finsler_norm(field, spot_vec("x"), spot_vec("y")),
                   spot.at("value").get<double>());
    }
    if (kind == "g_entry") {
      const RandersField field = field_from_config(cfg, "field");
      const Mat g = fundamental_tensor(field, spot_vec("x"), spot_vec("y"));
      return close(g(spot.at("i").get<int>(), spot.at("j").get<int>()),
                   spot.at("value").get<double>());
    }
    if (kind == "gamma_entry") {
      const RandersField field = field_from_config(cfg, "field");
      const Tensor3 g = christoffel(field, spot_vec("x"), spot_vec("y"));
      return close(g(0, 0, 0), spot.at("value").get<double>());
    }
    if (kind == "indicatrix_g_entry") {
      const RandersField field = field_from_config(cfg, "field");
      const Vec x = spot_vec("x");
      const Vec y = indicatrix_point(field, x, spot_vec("u"));
      return close(fundamental_tensor(field, x, y)(0, 0),
                   spot.at("value").get<double>());
    }
    if (kind == "velocity_component") {
      const RandersField field = field_from_config(cfg, "field");
      const Vec x = spot_vec("x");
      return close(2.0 * field.beta_at(x)(0), spot.at("value").get<double>());
    }
    if (kind == "hamiltonian_entry") {
      const RandersField field = field_from_config(cfg, "field");
      const GridModel model = GridModel::make(
          static_cast<int>(primary.at("n").get<long>()),
          primary.at("l").get<double>());
      const std::string nys = primary.at("nyquist").get<std::string>();
      const OperatorMatrix h = build_hamiltonian_operator(
          model, field.beta_entry(0),
          nys == "zeroed" ? NyquistMode::zeroed : NyquistMode::asymmetric);
      const auto v = h.m(spot.at("j").get<int>(), spot.at("l").get<int>());
      return close(v.real(), spot.at("re").get<double>()) &&
             close(v.imag(), spot.at("im").get<double>());
    }
    if (kind == "composed_beta") {
      const RandersField f1 = field_from_config(cfg, "field");
      const RandersField f2 = field_from_config(cfg, "field2");
      const std::string mode = spot.at("mode").get<std::string>();
      const ComposedField composed = mode == "direct_sum"
                                         ? compose_direct_sum(f1, f2)
                                         : compose_interacting(f1, f2);
      return close(composed.field.beta_at(spot_vec("x"))(0),
                   spot.at("value").get<double>());
    }
  } catch (const std::exception&) {
    return false;
  }
  (void)verb;
  return false;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int run_experiment(const CliOptions& opt) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  try {
    if (opt.verb == "report") return run_report(opt);

    static const std::set<std::string> kVerbs = {
        "validate", "eval",     "tensors", "connections",
        "average",  "flow",     "spectrum", "compose"};
    if (!kVerbs.count(opt.verb)) {
      std::cerr << "unknown verb '" << opt.verb << "'\n";
      return kUsage;
    }
    if (opt.config_path.empty() || opt.out_dir.empty()) {
      std::cerr << "--config and --out are required\n";
      return kUsage;
    }

    const Config cfg = Config::load(opt.config_path);
    {
      std::vector<std::string> known = {"meta", "field", opt.verb};
      if (opt.verb == "compose") known.push_back("field2");
      cfg.reject_unknown_sections(known);
    }
    const std::string label = sanitize_label(
        cfg.get_string("meta", "label", opt.verb));
    const long effective_seed = opt.seed.value_or(-1);
    const long effective_samples = opt.samples.value_or(-1);
    const std::string key = content_hash(
        opt.verb + "\n" + cfg.raw_text() + "\nseed=" +
        std::to_string(effective_seed) + "\nsamples=" +
        std::to_string(effective_samples) + "\nv=" + kToolVersion);

    fs::create_directories(opt.out_dir);
    const std::string cache_dir = opt.out_dir + "/cache";
    const std::string manifest_path = cache_dir + "/" + key + ".manifest";

    std::string cache_state = "miss";
    Artifacts artifacts;
    bool from_cache = false;
    if (fs::exists(manifest_path)) {
      try {
        std::istringstream names(read_file(manifest_path));
        Artifacts cached;
        std::string name;
        bool first = true;
        while (std::getline(names, name)) {
          if (name.empty()) continue;
          if (first) {
            cached.primary_name = name;
            first = false;
          }
          cached.files[name] = read_file(cache_dir + "/" + key + "." + name);
        }
        const nlohmann::json primary =
            nlohmann::json::parse(cached.files.at(cached.primary_name));
        if (verify_spot_check(opt.verb, cfg, primary)) {
          artifacts = std::move(cached);
          from_cache = true;
          cache_state = "hit";
        } else {
          cache_state = "stale";
        }
      } catch (const std::exception&) {
        cache_state = "unreadable";
      }
    }

    if (!from_cache) {
      Artifacts produced;
      if (opt.verb == "validate") produced = run_validate(cfg, opt, label);
      else if (opt.verb == "eval") produced = run_eval(cfg, opt, label);
      else if (opt.verb == "tensors") produced = run_tensors(cfg, opt, label);
      else if (opt.verb == "connections")
        produced = run_connections(cfg, opt, label);
      else if (opt.verb == "average") produced = run_average(cfg, opt, label);
      else if (opt.verb == "flow") produced = run_flow(cfg, opt, label);
      else if (opt.verb == "spectrum") produced = run_spectrum(cfg, opt, label);
      else produced = run_compose(cfg, opt, label);

      // wrap payload in the common envelope
      const std::string payload = produced.files.at("__payload__");
      produced.files.erase("__payload__");
      nlohmann::json pj = nlohmann::json::parse(payload);
      Json envelope = Json::object();
      envelope.set("schema_version", kSchemaVersion);
      envelope.set("tool_version", kToolVersion);
      envelope.set("verb", opt.verb);
      envelope.set("label", label);
      envelope.set("config_hash", key);
      envelope.set("seed_override", effective_seed);

      // splice payload into the envelope by re-serializing through the
      // deterministic writer
      std::function<Json(const nlohmann::json&)> convert =
          [&](const nlohmann::json& j) -> Json {
        if (j.is_object()) {
          Json o = Json::object();
          for (auto it = j.begin(); it != j.end(); ++it)
            o.set(it.key(), convert(it.value()));
          return o;
        }
        if (j.is_array()) {
          Json a = Json::array();
          for (const auto& e : j) a.push(convert(e));
          return a;
        }
        if (j.is_boolean()) return Json(j.get<bool>());
        if (j.is_number_integer()) return Json(j.get<long long>());
        if (j.is_number_float()) return Json(j.get<double>());
        if (j.is_string()) return Json(j.get<std::string>());
        return Json();
      };
      for (auto it = pj.begin(); it != pj.end(); ++it)
        envelope.set(it.key(), convert(it.value()));

      produced.primary_name = label + ".json";
      produced.files[produced.primary_name] = envelope.dump();
      artifacts = std::move(produced);

      fs::create_directories(cache_dir);
      std::string manifest = artifacts.primary_name + "\n";
      for (const auto& [name, bytes] : artifacts.files) {
        if (name != artifacts.primary_name) manifest += name + "\n";
        write_file_atomic(cache_dir + "/" + key + "." + name, bytes);
      }
      write_file_atomic(manifest_path, manifest);
    }

    for (const auto& [name, bytes] : artifacts.files)
      write_file_atomic(opt.out_dir + "/" + name, bytes);

    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          Clock::now() - started)
                          .count();
    Json meta = Json::object();
    meta.set("timestamp_utc", iso_timestamp());
    meta.set("wall_ms", static_cast<long>(wall));
    meta.set("cache", cache_state);
    meta.set("tool_version", kToolVersion);
    write_file_atomic(opt.out_dir + "/" + label + ".meta.json", meta.dump());
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const FieldInvalidError& e) {
    std::cerr << "invalid field: " << e.what() << "\n";
    return kFieldInvalid;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpected;
  }
}

}  // namespace finsdet
