#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "finsdet/common.hpp"
#include "finsdet/scalar_field.hpp"
#include "finsdet/tensor3.hpp"

namespace finsdet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

// Randers structure on a single chart: a Riemannian metric a_ij(x) plus a
// one-form beta_i(x) with sqrt(a^{ij} beta_i beta_j) < 1. The norm is
//   F(x, y) = sqrt(a_ij(x) y^i y^j) + beta_i(x) y^i.
class RandersField {
 public:
  RandersField() = default;

  // `a_upper` holds the upper triangle of a row by row: a_11, a_12, ..,
  // a_1n, a_22, .., a_nn. `beta` holds n entries. All fields take points
  // of dimension `dim`.
  RandersField(int dim, Box domain, std::vector<ScalarField> a_upper,
               std::vector<ScalarField> beta, double margin = 1e-6);

  // a = identity, beta = 0.
  static RandersField euclidean(int dim, Box domain);

  int dim() const { return dim_; }
  const Box& domain() const { return domain_; }
  double margin() const { return margin_; }

  Mat metric_at(const Vec& x) const;
  Vec beta_at(const Vec& x) const;

  const ScalarField& metric_entry(int i, int j) const;  // i <= j
  const ScalarField& beta_entry(int i) const { return beta_[i]; }

 private:
  int dim_ = 0;
  Box domain_;
  std::vector<ScalarField> a_upper_;
  std::vector<ScalarField> beta_;
  double margin_ = 1e-6;
};

// Pointwise data of the structure at (x, y): the norm, the fundamental
// tensor g_ij = (1/2) d^2 F^2 / dy^i dy^j, and the Cartan tensor
// A_ijk = (F/2) dg_ij/dy^k.
struct FinslerSample {
  Vec x, y;
  double F = 0.0;
  Mat g;
  Tensor3 A;
};

struct ValidationSample {
  Vec x;
  double min_eigenvalue = 0.0;  // of a(x)
  double beta_norm = 0.0;       // sqrt(a^{ij} beta_i beta_j)
};

struct ValidationReport {
  bool pass = false;
  std::vector<ValidationSample> samples;
  double worst_norm = 0.0;
  double min_eigenvalue = 0.0;
  std::string detail;
};

// Samples `sample_count` points of the domain and checks positive
// definiteness of a and the Randers bound |beta| <= 1 - margin.
ValidationReport validate_randers(const RandersField& field, int sample_count,
                                  uint64_t seed);

double finsler_norm(const RandersField& field, const Vec& x, const Vec& y);

enum class HessianMode { closed_form, numeric_hessian };

// Positive definite for valid structures; throws NumericalError when the
// result fails strong convexity.
Mat fundamental_tensor(const RandersField& field, const Vec& x, const Vec& y,
                       HessianMode mode = HessianMode::closed_form);

Tensor3 cartan_tensor(const RandersField& field, const Vec& x, const Vec& y);

FinslerSample finsler_sample(const RandersField& field, const Vec& x,
                             const Vec& y);

struct DualResult {
  Vec y_p;          // solves g(x, y_p) y_p = p
  double f_star;    // F(x, y_p)
  double residual;  // |g y - p| / |p| at exit
  int iterations;
};

// Legendre transform of the norm: F*(x, p) = max_{F(x,y)=1} <p, y>.
// Damped fixed-point iteration from the a-index raise of p.
DualResult legendre_dual(const RandersField& field, const Vec& x,
                         const Vec& p, int max_iterations = 200,
                         double tolerance = 1e-10);

// Builds the structure with a = identity and beta = f/2 on `domain`;
// rejects f whose sampled sup |f/2| reaches 1.
RandersField randers_from_deterministic(const std::vector<ScalarField>& f,
                                        const Box& domain,
                                        int check_samples = 256,
                                        uint64_t seed = 1);

struct ComposedField {
  RandersField field;
  int split = 0;  // dimension of the first block
  // Sup over samples of the contributions that pair one factor's data with
  // the other factor's momentum slot; identically 0 for the direct sum.
  double cross_term_magnitude = 0.0;
};

// Block-diagonal metric, concatenated one-forms. No coupling between the
// factors.
ComposedField compose_direct_sum(const RandersField& f1,
                                 const RandersField& f2);

// Identical-particle composition: requires a1 = a2 on the shared domain;
// each block of the composed one-form is (beta1 + beta2)/2 evaluated at
// that block's coordinates, so each factor's data enters the other
// factor's momentum pairing. The result is re-validated.
ComposedField compose_interacting(const RandersField& f1,
                                  const RandersField& f2,
                                  int check_samples = 256, uint64_t seed = 1);

// Max over sampled points of |d(2 beta_i)/dx_j| for (i, j) in different
// blocks: the Hamiltonian cross-derivative d^2 H / dp_i dx_j.
double cross_partial_max(const RandersField& composed, int split, int samples,
                         uint64_t seed);

// Uniform point in the field's domain, stream (seed, index).
Vec sample_domain_point(const Box& domain, uint64_t seed, uint64_t index);

}  // namespace finsdet
