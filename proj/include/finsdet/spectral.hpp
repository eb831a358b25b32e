#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "finsdet/common.hpp"
#include "finsdet/scalar_field.hpp"

namespace finsdet {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Treatment of the unpaired k = -N/2 Fourier mode on an even grid.
//
// asymmetric keeps the full FFT mode ladder {-N/2, .., N/2-1}; the momentum
// spectrum then reaches -N/2 exactly, which is what exhibits the linear
// divergence of the raw Hamiltonian. zeroed drops the Nyquist wavenumber,
// which makes P equal -i times a real antisymmetric matrix, so complex
// conjugation flips the sign of every operator built from it exactly (the
// realization of time inversion used here). The two constructions differ in
// one rank-1 term; both are standard.
enum class NyquistMode { asymmetric, zeroed };

struct GridModel {
  int size = 0;
  double period = 0.0;
  std::vector<double> xs;

  // N must be a power of two, N >= 8.
  static GridModel make(int n, double period = 6.283185307179586476925287);
};

struct OperatorMatrix {
  CMat m;
  bool hermitian = false;
};

struct GridOperators {
  OperatorMatrix position;  // diagonal grid points
  OperatorMatrix momentum;  // -i times the Fourier differentiation matrix
};

GridOperators build_grid_operators(const GridModel& model,
                                   NyquistMode nyquist = NyquistMode::asymmetric);

// H = beta(X) P + P beta(X), the symmetric ordering of 2 beta P. Hermitian
// for real beta; equals 2 b P exactly for constant beta = b.
OperatorMatrix build_hamiltonian_operator(const GridModel& model,
                                          const ScalarField& beta,
                                          NyquistMode nyquist = NyquistMode::asymmetric);

// |conj(H) + H| / |H| in the spectral norm; conjugation realizes the
// antiunitary time inversion in the position basis. Defined as 0 for H = 0.
double time_inversion_residual(const OperatorMatrix& H);

enum class SplitForm { paper, corrected };

// H = H1 - H2 with commuting nonnegative parts built over a positive
// operator rho commuting with H:
//   paper:     H1 = (rho^2 + H)^2 / (4 rho), difference rho H
//   corrected: H1 = (rho  + H)^2 / (4 rho), difference H exactly
// Both are evaluated as Hermitian sandwiches M rho^{-1} M / 4.
struct SplitResult {
  OperatorMatrix h1, h2;
  double difference_residual = 0.0;  // |H1 - H2 - target| (spectral norm)
  double commutator = 0.0;           // |[H1, H2]|
  double min_eig_h1 = 0.0, min_eig_h2 = 0.0;
  double rho_commutator = 0.0;       // |[rho, H]|
};

SplitResult thooft_split(const OperatorMatrix& H, const OperatorMatrix& rho,
                         SplitForm form);

// Paper and corrected splits agree on the rho = 1 eigenspace.
struct UnitRhoComparison {
  int subspace_dim = 0;
  double h1_difference = 0.0;
  double h2_difference = 0.0;
};

UnitRhoComparison compare_split_forms_on_unit_eigenspace(
    const OperatorMatrix& H, const OperatorMatrix& rho,
    double eigen_tolerance = 1e-8);

// exp(-i H t) psi via eigendecomposition; H must be Hermitian.
CVec time_evolution(const OperatorMatrix& H, const CVec& psi0, double t);
CMat evolution_operator(const OperatorMatrix& H, double t);

// Spectrum of the raw Hamiltonian next to the spectrum of its compression
// onto the fixed-|k| momentum shell (the grid analogue of the compact
// momentum constraint surface), weighted by a normalized |psi|^2 on the
// shell. The compressed operator's matrix elements are bounded uniformly in
// N while the raw minimum eigenvalue keeps descending.
struct SpectrumReport {
  std::vector<double> raw;       // ascending
  std::vector<double> averaged;  // ascending
  double raw_min = 0.0, raw_max = 0.0;
  double averaged_min = 0.0, averaged_max = 0.0;
  int shell_k = 0;
};

SpectrumReport averaged_operator_spectrum(
    const GridModel& model, const ScalarField& beta,
    const std::function<double(int)>& weight, int shell_k,
    NyquistMode nyquist = NyquistMode::asymmetric);

}  // namespace finsdet
