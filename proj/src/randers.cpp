#include "finsdet/randers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finsdet/rng.hpp"

namespace finsdet {

namespace {

constexpr double kYStep = 1e-4;  // scaled by max(1, |y|)

void check_point_dim(const RandersField& field, const Vec& x) {
  if (x.size() != field.dim())
    throw InputError("point dimension " + std::to_string(x.size()) +
                     " does not match field dimension " +
                     std::to_string(field.dim()));
}

void check_nonzero(const Vec& y, const char* what) {
  if (y.norm() == 0.0)
    throw InputError(std::string(what) +
                     " must be nonzero (the norm is defined on the split "
                     "tangent bundle)");
}

}  // namespace

RandersField::RandersField(int dim, Box domain,
                           std::vector<ScalarField> a_upper,
                           std::vector<ScalarField> beta, double margin)
    : dim_(dim),
      domain_(std::move(domain)),
      a_upper_(std::move(a_upper)),
      beta_(std::move(beta)),
      margin_(margin) {
  if (dim_ < 1) throw InputError("field dimension must be >= 1");
  if (domain_.dim() != dim_)
    throw InputError("domain dimension does not match field dimension");
  const size_t upper = static_cast<size_t>(dim_) * (dim_ + 1) / 2;
  if (a_upper_.size() != upper)
    throw InputError("metric needs " + std::to_string(upper) +
                     " upper-triangle entries, got " +
                     std::to_string(a_upper_.size()));
  if (beta_.size() != static_cast<size_t>(dim_))
    throw InputError("one-form needs " + std::to_string(dim_) + " entries");
  for (const auto& f : a_upper_)
    if (f.dim() != dim_)
      throw InputError("metric entry has wrong point dimension");
  for (const auto& f : beta_)
    if (f.dim() != dim_)
      throw InputError("one-form entry has wrong point dimension");
  if (!(margin_ > 0.0) || margin_ >= 1.0)
    throw InputError("Randers margin must lie in (0, 1)");
}

RandersField RandersField::euclidean(int dim, Box domain) {
  std::vector<ScalarField> a, b;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      a.push_back(ScalarField::constant(i == j ? 1.0 : 0.0, dim));
  for (int i = 0; i < dim; ++i) b.push_back(ScalarField::constant(0.0, dim));
  return RandersField(dim, std::move(domain), std::move(a), std::move(b));
}

const ScalarField& RandersField::metric_entry(int i, int j) const {
  // index of (i, j), i <= j, in the row-by-row upper triangle
  const int idx = i * dim_ - i * (i - 1) / 2 + (j - i);
  return a_upper_[static_cast<size_t>(idx)];
}

Mat RandersField::metric_at(const Vec& x) const {
  check_point_dim(*this, x);
  Mat a(dim_, dim_);
  const auto xs = as_span(x);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      const double v = metric_entry(i, j)(xs);
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

Vec RandersField::beta_at(const Vec& x) const {
  check_point_dim(*this, x);
  Vec b(dim_);
  const auto xs = as_span(x);
  for (int i = 0; i < dim_; ++i) b(i) = beta_[static_cast<size_t>(i)](xs);
  return b;
}

Vec sample_domain_point(const Box& domain, uint64_t seed, uint64_t index) {
  RandomStream rs(seed, index);
  Vec x(domain.dim());
  for (int d = 0; d < domain.dim(); ++d)
    x(d) = rs.uniform(domain.lo[d], domain.hi[d]);
  return x;
}

ValidationReport validate_randers(const RandersField& field, int sample_count,
                                  uint64_t seed) {
  if (sample_count < 1) throw InputError("sample_count must be >= 1");
  ValidationReport report;
  report.pass = true;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  report.worst_norm = 0.0;

  for (int s = 0; s < sample_count; ++s) {
    Vec x = sample_domain_point(field.domain(), seed, static_cast<uint64_t>(s));
    ValidationSample entry;
    entry.x = x;
    Mat a;
    Vec b;
    try {
      a = field.metric_at(x);
      b = field.beta_at(x);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " while validating at x = " +
                           format_point(x.data(), field.dim()));
    }

    Eigen::SelfAdjointEigenSolver<Mat> eig(a);
    entry.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (entry.min_eigenvalue > 0.0) {
      entry.beta_norm = std::sqrt(b.dot(a.ldlt().solve(b)));
    } else {
      entry.beta_norm = std::numeric_limits<double>::infinity();
    }

    report.min_eigenvalue = std::min(report.min_eigenvalue, entry.min_eigenvalue);
    if (std::isfinite(entry.beta_norm))
      report.worst_norm = std::max(report.worst_norm, entry.beta_norm);

    const bool spd = entry.min_eigenvalue > 0.0;
    const bool bounded =
        std::isfinite(entry.beta_norm) && entry.beta_norm <= 1.0 - field.margin();
    if (!spd || !bounded) {
      report.pass = false;
      if (report.detail.empty()) {
        char buf[128];
        if (!spd) {
          std::snprintf(buf, sizeof(buf),
                        "metric not positive definite (min eig %.6g)",
                        entry.min_eigenvalue);
        } else {
          std::snprintf(buf, sizeof(buf),
                        "Randers bound violated: |beta| = %.6g at x = ",
                        entry.beta_norm);
        }
        report.detail = buf;
        if (spd) report.detail += format_point(x.data(), field.dim());
      }
    }
    report.samples.push_back(std::move(entry));
  }
  return report;
}

double finsler_norm(const RandersField& field, const Vec& x, const Vec& y) {
  check_point_dim(field, x);
  check_nonzero(y, "y");
  const Mat a = field.metric_at(x);
  const double quad = y.dot(a * y);
  if (quad <= 0.0)
    throw NumericalError("metric not positive along y at x = " +
                         format_point(x.data(), field.dim()));
  return std::sqrt(quad) + field.beta_at(x).dot(y);
}

namespace {

// Closed form of the fundamental tensor:
//   g = (F/alpha) (a - l l^T) + (l + b)(l + b)^T,  l = a y / alpha.
Mat fundamental_closed(const Mat& a, const Vec& b, const Vec& y,
                       double* f_out = nullptr, double* alpha_out = nullptr) {
  const double alpha2 = y.dot(a * y);
  if (alpha2 <= 0.0)
    throw NumericalError("fundamental tensor: metric not positive along y");
  const double alpha = std::sqrt(alpha2);
  const Vec l = (a * y) / alpha;
  const double F = alpha + b.dot(y);
  const Vec m = l + b;
  Mat g = (F / alpha) * (a - l * l.transpose()) + m * m.transpose();
  if (f_out) *f_out = F;
  if (alpha_out) *alpha_out = alpha;
  return g;
}

Mat fundamental_numeric(const RandersField& field, const Vec& x, const Vec& y) {
  const int n = field.dim();
  const double h = kYStep * std::max(1.0, y.norm());
  const Mat a = field.metric_at(x);
  const Vec b = field.beta_at(x);
  auto f2 = [&](const Vec& yy) {
    const double quad = yy.dot(a * yy);
    if (quad <= 0.0)
      throw NumericalError("fundamental tensor: metric not positive along y");
    const double F = std::sqrt(quad) + b.dot(yy);
    return F * F;
  };
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v;
      if (i == j) {
        Vec yp = y, ym = y;
        yp(i) += h;
        ym(i) -= h;
        v = (f2(yp) - 2.0 * f2(y) + f2(ym)) / (h * h);
      } else {
        Vec ypp = y, ypm = y, ymp = y, ymm = y;
        ypp(i) += h; ypp(j) += h;
        ypm(i) += h; ypm(j) -= h;
        ymp(i) -= h; ymp(j) += h;
        ymm(i) -= h; ymm(j) -= h;
        v = (f2(ypp) - f2(ypm) - f2(ymp) + f2(ymm)) / (4.0 * h * h);
      }
      g(i, j) = 0.5 * v;
      g(j, i) = g(i, j);
    }
  }
  return g;
}

void require_spd(const Mat& g, const RandersField& field, const Vec& x) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(g);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError(
        "strong convexity violated: fundamental tensor not positive definite "
        "at x = " +
        format_point(x.data(), field.dim()));
}

}  // namespace

Mat fundamental_tensor(const RandersField& field, const Vec& x, const Vec& y,
                       HessianMode mode) {
  check_point_dim(field, x);
  check_nonzero(y, "y");
  Mat g = mode == HessianMode::closed_form
              ? fundamental_closed(field.metric_at(x), field.beta_at(x), y)
              : fundamental_numeric(field, x, y);
  require_spd(g, field, x);
  return g;
}

// A_ijk = (F / 2 alpha) (c_i h_jk + c_j h_ik + c_k h_ij) with
// h = a - l l^T and c = b - (beta(y)/alpha) l. Fully symmetric and
// A_ijk y^k = 0 by construction.
Tensor3 cartan_tensor(const RandersField& field, const Vec& x, const Vec& y) {
  check_point_dim(field, x);
  check_nonzero(y, "y");
  const int n = field.dim();
  const Mat a = field.metric_at(x);
  const Vec b = field.beta_at(x);
  const double alpha2 = y.dot(a * y);
  if (alpha2 <= 0.0)
    throw NumericalError("Cartan tensor: metric not positive along y");
  const double alpha = std::sqrt(alpha2);
  const Vec l = (a * y) / alpha;
  const double F = alpha + b.dot(y);
  const Mat h = a - l * l.transpose();
  const Vec c = b - (b.dot(y) / alpha) * l;
  const double scale = F / (2.0 * alpha);

  Tensor3 A(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        A(i, j, k) = scale * (c(i) * h(j, k) + c(j) * h(i, k) + c(k) * h(i, j));
  return A;
}

FinslerSample finsler_sample(const RandersField& field, const Vec& x,
                             const Vec& y) {
  FinslerSample s;
  s.x = x;
  s.y = y;
  s.F = finsler_norm(field, x, y);
  s.g = fundamental_tensor(field, x, y);
  s.A = cartan_tensor(field, x, y);
  return s;
}

DualResult legendre_dual(const RandersField& field, const Vec& x, const Vec& p,
                         int max_iterations, double tolerance) {
  check_point_dim(field, x);
  check_nonzero(p, "p");
  const Mat a = field.metric_at(x);
  const Vec b = field.beta_at(x);
  const double pnorm = p.norm();

  auto residual_of = [&](const Vec& y) {
    return (fundamental_closed(a, b, y) * y - p).norm() / pnorm;
  };

  Vec y = a.ldlt().solve(p);  // a-index raise of p
  double res = residual_of(y);
  int it = 0;
  for (; it < max_iterations && res > tolerance; ++it) {
    const Mat g = fundamental_closed(a, b, y);
    const Vec y_new = g.ldlt().solve(p);
    // damped update: back off while the residual grows
    double step = 1.0;
    Vec candidate = y + step * (y_new - y);
    double cand_res = residual_of(candidate);
    for (int back = 0; back < 6 && cand_res >= res; ++back) {
      step *= 0.5;
      candidate = y + step * (y_new - y);
      cand_res = residual_of(candidate);
    }
    y = candidate;
    res = cand_res;
  }
  if (res > tolerance) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "legendre_dual: no convergence after %d iterations "
                  "(residual %.3e)",
                  max_iterations, res);
    throw NumericalError(buf);
  }
  DualResult out;
  out.y_p = y;
  out.f_star = finsler_norm(field, x, y);
  out.residual = res;
  out.iterations = it;
  return out;
}

RandersField randers_from_deterministic(const std::vector<ScalarField>& f,
                                        const Box& domain, int check_samples,
                                        uint64_t seed) {
  const int n = domain.dim();
  if (static_cast<int>(f.size()) != n)
    throw InputError("velocity field needs " + std::to_string(n) +
                     " components");
  std::vector<ScalarField> a;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      a.push_back(ScalarField::constant(i == j ? 1.0 : 0.0, n));
  std::vector<ScalarField> beta;
  for (const auto& fi : f) beta.push_back(fi.scaled(0.5));

  RandersField field(n, domain, std::move(a), std::move(beta));

  double worst = 0.0;
  Vec worst_x;
  for (int s = 0; s < check_samples; ++s) {
    const Vec x = sample_domain_point(domain, seed, static_cast<uint64_t>(s));
    const double norm = field.beta_at(x).norm();  // a = identity
    if (norm > worst) {
      worst = norm;
      worst_x = x;
    }
  }
  if (worst >= 1.0) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "not a Randers structure: |f/2| = %.6g at x = ", worst);
    throw FieldInvalidError(buf + format_point(worst_x.data(), n));
  }
  return field;
}

namespace {

ScalarField slice_field(const ScalarField& inner, int total_dim, int offset) {
  const int n = inner.dim();
  return ScalarField::callable(
      [inner, offset, n](std::span<const double> x) {
        return inner(x.subspan(static_cast<size_t>(offset),
                               static_cast<size_t>(n)));
      },
      total_dim, inner.describe());
}

Box product_box(const Box& b1, const Box& b2) {
  std::vector<double> lo = b1.lo, hi = b1.hi;
  lo.insert(lo.end(), b2.lo.begin(), b2.lo.end());
  hi.insert(hi.end(), b2.hi.begin(), b2.hi.end());
  std::vector<bool> per;
  for (int d = 0; d < b1.dim(); ++d) per.push_back(b1.is_periodic(d));
  for (int d = 0; d < b2.dim(); ++d) per.push_back(b2.is_periodic(d));
  return Box(std::move(lo), std::move(hi), std::move(per));
}

}  // namespace

ComposedField compose_direct_sum(const RandersField& f1,
                                 const RandersField& f2) {
  const int n1 = f1.dim(), n2 = f2.dim(), n = n1 + n2;
  std::vector<ScalarField> a;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (i < n1 && j < n1)
        a.push_back(slice_field(f1.metric_entry(i, j), n, 0));
      else if (i >= n1 && j >= n1)
        a.push_back(slice_field(f2.metric_entry(i - n1, j - n1), n, n1));
      else
        a.push_back(ScalarField::constant(0.0, n));
    }
  std::vector<ScalarField> beta;
  for (int i = 0; i < n1; ++i)
    beta.push_back(slice_field(f1.beta_entry(i), n, 0));
  for (int i = 0; i < n2; ++i)
    beta.push_back(slice_field(f2.beta_entry(i), n, n1));

  ComposedField out{RandersField(n, product_box(f1.domain(), f2.domain()),
                                 std::move(a), std::move(beta),
                                 std::min(f1.margin(), f2.margin())),
                    n1, 0.0};
  return out;
}

ComposedField compose_interacting(const RandersField& f1,
                                  const RandersField& f2, int check_samples,
                                  uint64_t seed) {
  const int n = f1.dim();
  if (f2.dim() != n)
    throw InputError("interacting composition needs equal factor dimensions");

  // shared base domain: intersection of the factors' boxes
  std::vector<double> lo(n), hi(n);
  std::vector<bool> per(n);
  for (int d = 0; d < n; ++d) {
    lo[d] = std::max(f1.domain().lo[d], f2.domain().lo[d]);
    hi[d] = std::min(f1.domain().hi[d], f2.domain().hi[d]);
    if (!(lo[d] < hi[d]))
      throw InputError("interacting composition: factor domains do not overlap");
    per[d] = f1.domain().is_periodic(d) && f2.domain().is_periodic(d);
  }
  Box shared(lo, hi, per);

  // the construction requires alpha1 = alpha2; checked on samples
  double worst_gap = 0.0;
  for (int s = 0; s < check_samples; ++s) {
    const Vec x = sample_domain_point(shared, seed, static_cast<uint64_t>(s));
    worst_gap = std::max(
        worst_gap, (f1.metric_at(x) - f2.metric_at(x)).cwiseAbs().maxCoeff());
  }
  if (worst_gap > 1e-9) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "interacting composition requires a1 = a2; sampled gap %.3e",
                  worst_gap);
    throw InputError(buf);
  }

  const int total = 2 * n;
  std::vector<ScalarField> a;
  for (int i = 0; i < total; ++i)
    for (int j = i; j < total; ++j) {
      if (i < n && j < n)
        a.push_back(slice_field(f1.metric_entry(i, j), total, 0));
      else if (i >= n && j >= n)
        a.push_back(slice_field(f2.metric_entry(i - n, j - n), total, n));
      else
        a.push_back(ScalarField::constant(0.0, total));
    }

  // block b of the composed one-form: (beta1 + beta2)/2 at that block's
  // coordinates, i.e. the four pairings beta_a(p_b) with the 1/2 factor
  std::vector<ScalarField> beta;
  for (int block = 0; block < 2; ++block) {
    const int offset = block * n;
    for (int i = 0; i < n; ++i) {
      ScalarField b1 = f1.beta_entry(i), b2 = f2.beta_entry(i);
      beta.push_back(ScalarField::callable(
          [b1, b2, offset, n](std::span<const double> x) {
            const auto xb = x.subspan(static_cast<size_t>(offset),
                                      static_cast<size_t>(n));
            return 0.5 * (b1(xb) + b2(xb));
          },
          total, "(" + b1.describe() + " + " + b2.describe() + ")/2"));
    }
  }

  ComposedField out{RandersField(total, product_box(shared, shared),
                                 std::move(a), std::move(beta),
                                 std::min(f1.margin(), f2.margin())),
                    n, 0.0};

  // cross contributions: factor a's one-form entering block b != a
  for (int s = 0; s < check_samples; ++s) {
    const Vec x = sample_domain_point(shared, seed + 1, static_cast<uint64_t>(s));
    out.cross_term_magnitude = std::max(
        {out.cross_term_magnitude, 0.5 * f1.beta_at(x).cwiseAbs().maxCoeff(),
         0.5 * f2.beta_at(x).cwiseAbs().maxCoeff()});
  }

  ValidationReport check = validate_randers(out.field, check_samples, seed + 2);
  if (!check.pass)
    throw FieldInvalidError("interacting composition rejected: " +
                            check.detail);
  return out;
}

double cross_partial_max(const RandersField& composed, int split, int samples,
                         uint64_t seed) {
  const int n = composed.dim();
  const double h = 1e-5;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec x =
        sample_domain_point(composed.domain(), seed, static_cast<uint64_t>(s));
    for (int j = 0; j < n; ++j) {
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const Vec d = (composed.beta_at(xp) - composed.beta_at(xm)) / (2.0 * h);
      for (int i = 0; i < n; ++i) {
        const bool cross = (i < split) != (j < split);
        if (cross) worst = std::max(worst, std::abs(2.0 * d(i)));
      }
    }
  }
  return worst;
}

}  // namespace finsdet
