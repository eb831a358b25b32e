#pragma once

#include <functional>

#include "finsdet/randers.hpp"

namespace finsdet {

enum class AvgDomain { indicatrix, sphere };
enum class AvgMethod { monte_carlo, product_quadrature };
// euclidean_angular: pullback of the Euclidean angular measure through the
// parametrization u -> u / F(x, u). g_volume: density of the g-induced
// volume of the integration surface relative to that angular measure.
enum class AvgMeasure { euclidean_angular, g_volume };

struct AveragingScheme {
  AvgDomain domain = AvgDomain::indicatrix;
  AvgMethod method = AvgMethod::monte_carlo;
  AvgMeasure measure = AvgMeasure::euclidean_angular;
  long samples = 100000;  // Monte Carlo draws / total quadrature nodes
  uint64_t seed = 0;
  // psi >= 0, normalized internally; null means psi == 1
  std::function<double(const Vec& x, const Vec& y)> weight;
};

// Point of {F(x, .) = 1} in direction u: u / F(x, u).
Vec indicatrix_point(const RandersField& field, const Vec& x, const Vec& u);

struct AveragedMetric {
  Vec x;
  Mat h;   // weighted average of g over the chosen surface
  Mat se;  // Monte Carlo standard errors, zero for quadrature
  bool spd = false;
};

AveragedMetric average_metric(const RandersField& field, const Vec& x,
                              const AveragingScheme& scheme);

struct AveragedHamiltonian {
  double value = 0.0;
  double se = 0.0;
  // 2 max |beta . p| over the evaluated surface points; finite because the
  // surface is compact and beta bounded, and |value| <= bound always holds.
  double bound = 0.0;
};

// Average of H(x, p) = 2 beta(x) . p over the momentum surface.
AveragedHamiltonian average_hamiltonian(const RandersField& field,
                                        const Vec& x,
                                        const AveragingScheme& scheme);

struct HamiltonianSplit {
  AveragedHamiltonian mean;                      // matter part <H>_x
  std::function<double(const Vec& p)> fluctuation;  // dH(x, p) = H - <H>_x
};

HamiltonianSplit decompose_hamiltonian(const RandersField& field, const Vec& x,
                                       const AveragingScheme& scheme);

}  // namespace finsdet
