#pragma once

#include <optional>

#include "finsdet/randers.hpp"

namespace finsdet {

// Deterministic evolution generated by H(x, p) = 2 beta(x) . p, i.e. the
// first-order system dx/dt = 2 beta(x).

// The two algebraic routes to the Hamiltonian; they agree to rounding
// because the symmetric part of the norm cancels in the difference.
double classical_hamiltonian(const RandersField& field, const Vec& x,
                             const Vec& p);  // 2 beta(x) . p
double classical_hamiltonian_from_norms(const RandersField& field,
                                        const Vec& x,
                                        const Vec& p);  // F(x,p) - F(x,-p)

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> velocities;  // 2 beta(x) at each state
  bool exited_domain = false;   // stopped at a non-periodic boundary
};

// Fixed-step classical RK4. Periodic axes wrap; leaving the box through a
// non-periodic face truncates the trajectory and sets the flag.
Trajectory flow(const RandersField& field, const Vec& x0, double t_final,
                double dt);

struct BoundsReport {
  double max_speed = 0.0;
  double speed_bound = 0.0;  // 2 sup_domain |beta|_{a^-1} < 2
  double max_acceleration = 0.0;
  double acceleration_bound = 0.0;  // 2 x sampled Lipschitz bound of 2 beta
  bool pass = false;
};

// Velocities and accelerations are covectors here (components of 2 beta);
// both are measured in the a^{-1} norm at their state, which is what makes
// the geometric speed bound hold for every valid structure. The
// acceleration bound is a sampled certificate, not a proof.
BoundsReport bounds_check(const RandersField& field, const Trajectory& traj,
                          int lipschitz_samples = 200, uint64_t seed = 3);

// a_p = mass_ratio * c^2 / L_p.
double max_acceleration_estimate(double mass_ratio, double c,
                                 double planck_length);

// First time a 1D trajectory on a periodic axis returns to its starting
// point, found by crossing detection with linear interpolation.
std::optional<double> first_return_time(const Trajectory& traj,
                                        double circumference);

}  // namespace finsdet
