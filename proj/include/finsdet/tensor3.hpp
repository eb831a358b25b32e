#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace finsdet {

// Dense rank-3 array of doubles, n x n x n. Index order (i, j, k).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), v_(static_cast<size_t>(n) * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return v_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return v_[idx(i, j, k)]; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  Tensor3& operator-=(const Tensor3& o) {
    for (size_t t = 0; t < v_.size(); ++t) v_[t] -= o.v_[t];
    return *this;
  }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }

 private:
  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(i) * n_ + j) * n_ + k;
  }
  int n_ = 0;
  std::vector<double> v_;
};

}  // namespace finsdet
