#pragma once

#include <cmath>
#include <cstdint>

namespace finsdet {

// Counter-based random stream (splitmix64). A stream is addressed by
// (seed, index), so sample i can be generated without generating samples
// < i. This keeps Monte Carlo results identical for a fixed seed no matter
// how the sample loop is scheduled.
class RandomStream {
 public:
  RandomStream(uint64_t seed, uint64_t index)
      : state_(mix(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)))) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; pairs are cached.
  double gaussian() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925287 * u2;
    cache_ = r * std::sin(a);
    has_cache_ = true;
    return r * std::cos(a);
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t state_;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace finsdet
