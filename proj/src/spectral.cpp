#include "finsdet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace finsdet {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;
using Cplx = std::complex<double>;

double spectral_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// Normalized Fourier mode |k>: v_j = exp(2 pi i k j / N) / sqrt(N).
CVec fourier_mode(int n, int k) {
  CVec v(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    const double phase = kTwoPi * static_cast<double>(k) *
                         static_cast<double>(j) / static_cast<double>(n);
    v(j) = Cplx(std::cos(phase), std::sin(phase)) * scale;
  }
  return v;
}

void require_hermitian(const OperatorMatrix& op, const char* what) {
  const double gap = spectral_norm(op.m - op.m.adjoint());
  const double scale = std::max(1.0, spectral_norm(op.m));
  if (gap > 1e-10 * scale)
    throw InputError(std::string(what) + ": operator is not Hermitian");
}

Eigen::VectorXd hermitian_eigenvalues(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(m);
  return eig.eigenvalues();
}

}  // namespace

GridModel GridModel::make(int n, double period) {
  if (n < 8 || (n & (n - 1)) != 0)
    throw InputError("grid size must be a power of two, >= 8");
  if (!(period > 0.0)) throw InputError("grid period must be > 0");
  GridModel m;
  m.size = n;
  m.period = period;
  m.xs.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j)
    m.xs[static_cast<size_t>(j)] =
        period * static_cast<double>(j) / static_cast<double>(n);
  return m;
}

GridOperators build_grid_operators(const GridModel& model,
                                   NyquistMode nyquist) {
  const int n = model.size;
  GridOperators ops;

  ops.position.m = CMat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    ops.position.m(j, j) = model.xs[static_cast<size_t>(j)];
  ops.position.hermitian = true;

  // P = V diag(k~) V^dagger over the mode ladder
  CMat vk(n, n);
  Eigen::VectorXd wavenumbers(n);
  int col = 0;
  for (int k = -n / 2; k < n / 2; ++k, ++col) {
    vk.col(col) = fourier_mode(n, k);
    double w = kTwoPi * static_cast<double>(k) / model.period;
    if (nyquist == NyquistMode::zeroed && k == -n / 2) w = 0.0;
    wavenumbers(col) = w;
  }
  ops.momentum.m = vk * wavenumbers.asDiagonal() * vk.adjoint();
  if (nyquist == NyquistMode::zeroed) {
    // P is then -i times a real antisymmetric matrix; store it that way so
    // conjugation flips its sign without rounding noise.
    CMat p = ops.momentum.m;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        p(r, c) = Cplx(0.0, p(r, c).imag());
    ops.momentum.m = 0.5 * (p - p.transpose());
  }
  ops.momentum.hermitian = true;
  return ops;
}

OperatorMatrix build_hamiltonian_operator(const GridModel& model,
                                          const ScalarField& beta,
                                          NyquistMode nyquist) {
  if (beta.dim() != 1)
    throw InputError("spectral Hamiltonian: beta must be a 1D field");
  const int n = model.size;
  const CMat p = build_grid_operators(model, nyquist).momentum.m;

  Eigen::VectorXd b(n);
  for (int j = 0; j < n; ++j) {
    const double x = model.xs[static_cast<size_t>(j)];
    const double v = beta(std::span<const double>(&x, 1));
    if (!std::isfinite(v))
      throw InputError("spectral Hamiltonian: beta not finite on the grid");
    b(j) = v;
  }

  OperatorMatrix h;
  const CVec bc = b.cast<Cplx>();
  h.m = bc.asDiagonal() * p + p * bc.asDiagonal();
  h.hermitian = true;
  return h;
}

double time_inversion_residual(const OperatorMatrix& H) {
  const double scale = spectral_norm(H.m);
  if (scale == 0.0) return 0.0;
  return spectral_norm(H.m.conjugate() + H.m) / scale;
}

SplitResult thooft_split(const OperatorMatrix& H, const OperatorMatrix& rho,
                         SplitForm form) {
  require_hermitian(H, "thooft_split H");
  require_hermitian(rho, "thooft_split rho");

  Eigen::SelfAdjointEigenSolver<CMat> rho_eig(rho.m);
  if (rho_eig.eigenvalues().minCoeff() <= 0.0)
    throw InputError("thooft_split: rho must be positive definite");

  SplitResult out;
  out.rho_commutator = spectral_norm(rho.m * H.m - H.m * rho.m);
  const double comm_scale =
      1.0 + spectral_norm(rho.m) * spectral_norm(H.m);
  if (out.rho_commutator > 1e-10 * comm_scale) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "thooft_split: [rho, H] = %.3e, not commuting",
                  out.rho_commutator);
    throw InputError(buf);
  }

  const CVec rho_inv_eigs =
      rho_eig.eigenvalues().cwiseInverse().cast<Cplx>();
  const CMat rho_inv = rho_eig.eigenvectors() * rho_inv_eigs.asDiagonal() *
                       rho_eig.eigenvectors().adjoint();

  const CMat base = form == SplitForm::paper ? CMat(rho.m * rho.m) : rho.m;
  const CMat a = base + H.m;
  const CMat b = base - H.m;
  out.h1.m = 0.25 * a * rho_inv * a;
  out.h2.m = 0.25 * b * rho_inv * b;
  out.h1.hermitian = true;
  out.h2.hermitian = true;

  const CMat target = form == SplitForm::paper ? CMat(rho.m * H.m) : H.m;
  out.difference_residual = spectral_norm(out.h1.m - out.h2.m - target);
  out.commutator = spectral_norm(out.h1.m * out.h2.m - out.h2.m * out.h1.m);
  out.min_eig_h1 = hermitian_eigenvalues(out.h1.m).minCoeff();
  out.min_eig_h2 = hermitian_eigenvalues(out.h2.m).minCoeff();
  return out;
}

UnitRhoComparison compare_split_forms_on_unit_eigenspace(
    const OperatorMatrix& H, const OperatorMatrix& rho,
    double eigen_tolerance) {
  const SplitResult paper = thooft_split(H, rho, SplitForm::paper);
  const SplitResult corrected = thooft_split(H, rho, SplitForm::corrected);

  Eigen::SelfAdjointEigenSolver<CMat> eig(rho.m);
  std::vector<int> unit;
  for (int i = 0; i < eig.eigenvalues().size(); ++i)
    if (std::abs(eig.eigenvalues()(i) - 1.0) <= eigen_tolerance)
      unit.push_back(i);

  UnitRhoComparison out;
  out.subspace_dim = static_cast<int>(unit.size());
  if (unit.empty()) return out;

  CMat q(rho.m.rows(), out.subspace_dim);
  for (int c = 0; c < out.subspace_dim; ++c)
    q.col(c) = eig.eigenvectors().col(unit[static_cast<size_t>(c)]);

  out.h1_difference =
      spectral_norm(q.adjoint() * (paper.h1.m - corrected.h1.m) * q);
  out.h2_difference =
      spectral_norm(q.adjoint() * (paper.h2.m - corrected.h2.m) * q);
  return out;
}

CVec time_evolution(const OperatorMatrix& H, const CVec& psi0, double t) {
  require_hermitian(H, "time_evolution");
  if (psi0.size() != H.m.rows())
    throw InputError("time_evolution: state dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMat> eig(H.m);
  CVec phases(eig.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i) {
    const double a = -eig.eigenvalues()(i) * t;
    phases(i) = Cplx(std::cos(a), std::sin(a));
  }
  return eig.eigenvectors() *
         (phases.asDiagonal() * (eig.eigenvectors().adjoint() * psi0));
}

CMat evolution_operator(const OperatorMatrix& H, double t) {
  require_hermitian(H, "evolution_operator");
  Eigen::SelfAdjointEigenSolver<CMat> eig(H.m);
  CVec phases(eig.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i) {
    const double a = -eig.eigenvalues()(i) * t;
    phases(i) = Cplx(std::cos(a), std::sin(a));
  }
  return eig.eigenvectors() * phases.asDiagonal() *
         eig.eigenvectors().adjoint();
}

SpectrumReport averaged_operator_spectrum(
    const GridModel& model, const ScalarField& beta,
    const std::function<double(int)>& weight, int shell_k,
    NyquistMode nyquist) {
  const int n = model.size;
  if (shell_k < 1 || shell_k >= n / 2)
    throw InputError(
        "averaged spectrum: empty momentum shell (need 1 <= k0 < N/2)");

  const OperatorMatrix h = build_hamiltonian_operator(model, beta, nyquist);

  SpectrumReport report;
  report.shell_k = shell_k;
  const Eigen::VectorXd raw = hermitian_eigenvalues(h.m);
  report.raw.assign(raw.data(), raw.data() + raw.size());

  // |psi|^2 on the shell, normalized
  const int shell[2] = {shell_k, -shell_k};
  double wsum = 0.0;
  double w[2];
  for (int s = 0; s < 2; ++s) {
    w[s] = weight ? weight(shell[s]) : 1.0;
    if (w[s] < 0.0)
      throw InputError("averaged spectrum: weight must be nonnegative");
    wsum += w[s];
  }
  if (!(wsum > 0.0))
    throw InputError("averaged spectrum: weight vanishes on the shell");

  CMat sandwich = CMat::Zero(n, n);
  for (int s = 0; s < 2; ++s) {
    const CVec v = fourier_mode(n, shell[s]);
    sandwich += std::sqrt(w[s] / wsum) * (v * v.adjoint());
  }
  const CMat averaged = sandwich * h.m * sandwich;
  const Eigen::VectorXd avg = hermitian_eigenvalues(averaged);
  report.averaged.assign(avg.data(), avg.data() + avg.size());

  report.raw_min = raw.minCoeff();
  report.raw_max = raw.maxCoeff();
  report.averaged_min = avg.minCoeff();
  report.averaged_max = avg.maxCoeff();
  return report;
}

}  // namespace finsdet
