#include "finsdet/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "finsdet/rng.hpp"

namespace finsdet {

double classical_hamiltonian(const RandersField& field, const Vec& x,
                             const Vec& p) {
  if (x.size() != field.dim() || p.size() != field.dim())
    throw InputError("classical_hamiltonian: dimension mismatch");
  return 2.0 * field.beta_at(x).dot(p);
}

double classical_hamiltonian_from_norms(const RandersField& field,
                                        const Vec& x, const Vec& p) {
  return finsler_norm(field, x, p) - finsler_norm(field, x, Vec(-p));
}

Trajectory flow(const RandersField& field, const Vec& x0, double t_final,
                double dt) {
  if (!(dt > 0.0)) throw InputError("flow: dt must be > 0");
  if (t_final < 0.0) throw InputError("flow: t_final must be >= 0");
  if (x0.size() != field.dim())
    throw InputError("flow: x0 dimension mismatch");
  const Box& box = field.domain();
  if (!box.contains(x0.data(), field.dim()))
    throw InputError("flow: x0 outside the domain");

  auto velocity = [&](const Vec& x) { return Vec(2.0 * field.beta_at(x)); };

  Trajectory traj;
  Vec x = x0;
  box.wrap(x.data());
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  traj.velocities.push_back(velocity(x));

  const long full_steps = static_cast<long>(std::floor(t_final / dt + 1e-12));
  double t = 0.0;
  for (long k = 0; t < t_final; ++k) {
    const double step =
        k < full_steps ? dt : t_final - t;  // final partial step
    if (step <= 0.0) break;
    const Vec k1 = velocity(x);
    const Vec k2 = velocity(x + 0.5 * step * k1);
    const Vec k3 = velocity(x + 0.5 * step * k2);
    const Vec k4 = velocity(x + step * k3);
    Vec x_next = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!box.contains(x_next.data(), field.dim())) {
      traj.exited_domain = true;
      break;
    }
    box.wrap(x_next.data());
    x = x_next;
    t = k < full_steps ? dt * static_cast<double>(k + 1) : t_final;
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.velocities.push_back(velocity(x));
  }
  return traj;
}

namespace {

double covector_norm(const Mat& a, const Vec& v) {
  return std::sqrt(v.dot(a.ldlt().solve(v)));
}

}  // namespace

BoundsReport bounds_check(const RandersField& field, const Trajectory& traj,
                          int lipschitz_samples, uint64_t seed) {
  BoundsReport report;
  if (traj.states.empty()) throw InputError("bounds_check: empty trajectory");

  for (size_t k = 0; k < traj.states.size(); ++k) {
    const Mat a = field.metric_at(traj.states[k]);
    report.max_speed =
        std::max(report.max_speed, covector_norm(a, traj.velocities[k]));
    if (k + 1 < traj.states.size()) {
      const double dt = traj.times[k + 1] - traj.times[k];
      const Vec dv = (traj.velocities[k + 1] - traj.velocities[k]) / dt;
      report.max_acceleration =
          std::max(report.max_acceleration, covector_norm(a, dv));
    }
  }

  // speed bound: 2 sup |beta|_{a^-1} over sampled domain points; the
  // trajectory's own states count as domain samples, which keeps the
  // certificate consistent with the maxima measured above
  double sup_beta = 0.0;
  double lipschitz = 0.0;
  for (int s = 0; s < lipschitz_samples; ++s) {
    const Vec x1 =
        sample_domain_point(field.domain(), seed, 2 * static_cast<uint64_t>(s));
    const Vec x2 = sample_domain_point(field.domain(), seed,
                                       2 * static_cast<uint64_t>(s) + 1);
    const Mat a = field.metric_at(x1);
    sup_beta = std::max(sup_beta, covector_norm(a, field.beta_at(x1)));
    const double dx = (x2 - x1).norm();
    if (dx > 0.0) {
      const Vec dvel = 2.0 * (field.beta_at(x2) - field.beta_at(x1));
      lipschitz = std::max(lipschitz, covector_norm(a, dvel) / dx);
    }
  }
  for (size_t k = 0; k < traj.states.size(); ++k) {
    const Mat a = field.metric_at(traj.states[k]);
    sup_beta = std::max(
        sup_beta, covector_norm(a, Vec(0.5 * traj.velocities[k])));
    if (k + 1 < traj.states.size()) {
      const double dx = (traj.states[k + 1] - traj.states[k]).norm();
      if (dx > 0.0)
        lipschitz = std::max(
            lipschitz,
            covector_norm(a, Vec(traj.velocities[k + 1] -
                                 traj.velocities[k])) /
                dx);
    }
  }
  report.speed_bound = 2.0 * sup_beta;
  report.acceleration_bound = 2.0 * lipschitz;
  report.pass = report.max_speed <= report.speed_bound + 1e-12 &&
                report.max_acceleration <= report.acceleration_bound + 1e-12;
  return report;
}

double max_acceleration_estimate(double mass_ratio, double c,
                                 double planck_length) {
  if (!(mass_ratio > 0.0) || !(c > 0.0) || !(planck_length > 0.0))
    throw InputError("max_acceleration_estimate: inputs must be positive");
  return mass_ratio * c * c / planck_length;
}

std::optional<double> first_return_time(const Trajectory& traj,
                                        double circumference) {
  if (traj.states.empty() || traj.states.front().size() != 1) return {};
  const double x0 = traj.states.front()(0);
  double unwrapped_prev = x0;
  for (size_t k = 1; k < traj.states.size(); ++k) {
    // unwrap: assume steps shorter than half the circumference
    const double prev_wrapped = traj.states[k - 1](0);
    double delta = traj.states[k](0) - prev_wrapped;
    if (delta > 0.5 * circumference) delta -= circumference;
    if (delta < -0.5 * circumference) delta += circumference;
    const double unwrapped = unwrapped_prev + delta;
    const double target =
        delta >= 0.0 ? x0 + circumference : x0 - circumference;
    const bool crossed = delta >= 0.0 ? (unwrapped >= target)
                                      : (unwrapped <= target);
    if (crossed && delta != 0.0) {
      const double frac = (target - unwrapped_prev) / delta;
      return traj.times[k - 1] +
             frac * (traj.times[k] - traj.times[k - 1]);
    }
    unwrapped_prev = unwrapped;
  }
  return {};
}

}  // namespace finsdet
