#pragma once

#include "finsdet/randers.hpp"

namespace finsdet {

// Connection data of the structure at (x, y).
//
// gamma      formal second-kind Christoffel symbols of g (x-derivatives at
//            fixed y, central differences of the closed-form tensor)
// nonlinear  N^i_j = gamma^i_jk y^k - A^i_jk gamma^k_rs y^r y^s / F
// chern      horizontal Chern coefficients from the cyclic solve in the
//            horizontal derivatives d/dx^k - N^l_k d/dy^l
// cartan_vertical  A^k_ij / F, the vertical addition that turns the Chern
//            connection into the Cartan connection
//
// The two structure equations (zero torsion, almost g-compatibility) are
// re-evaluated numerically along randomized tangent directions of T(TM\0)
// with independent difference steps; their residuals are reported.
struct ConnectionBundle {
  Vec x, y;
  Tensor3 gamma;
  Mat nonlinear;
  Tensor3 chern;
  Tensor3 cartan_vertical;
  double torsion_residual = 0.0;
  double compatibility_residual = 0.0;
  bool within_tolerance = true;
};

Tensor3 christoffel(const RandersField& field, const Vec& x, const Vec& y);

Mat nonlinear_connection(const RandersField& field, const Vec& x,
                         const Vec& y);

ConnectionBundle chern_connection(const RandersField& field, const Vec& x,
                                  const Vec& y, int residual_directions = 20,
                                  uint64_t seed = 2026,
                                  double tolerance = 1e-6);

// Chern bundle plus the vertical Cartan addition A^k_ij / F.
ConnectionBundle cartan_connection(const RandersField& field, const Vec& x,
                                   const Vec& y, int residual_directions = 20,
                                   uint64_t seed = 2026,
                                   double tolerance = 1e-6);

}  // namespace finsdet
