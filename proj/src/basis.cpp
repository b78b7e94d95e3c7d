#include "dartr/basis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dartr/error.hpp"

namespace dartr {

std::string_view to_string(BasisKind kind) {
  return kind == BasisKind::PiecewiseConstant ? "PiecewiseConstant" : "BSpline";
}

BasisKind parse_basis(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "piecewiseconstant" || s == "piecewise_constant" || s == "pc") {
    return BasisKind::PiecewiseConstant;
  }
  if (s == "bspline" || s == "b-spline") return BasisKind::BSpline;
  fail(ErrorCode::ConfigError, "unknown basis kind '" + std::string(name) + "'");
}

std::size_t max_dimension(double R, double dx) {
  if (!(dx > 0.0) || !(R > 0.0)) fail(ErrorCode::InvalidArgument, "R and dx must be positive");
  return static_cast<std::size_t>(std::floor(R / dx + kCommensurabilityTol));
}

HypothesisSpace build_hypothesis_space(BasisKind kind, std::size_t n, double R, double dx,
                                       int degree) {
  const std::size_t full = max_dimension(R, dx);
  const auto lowest = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(full) - 1e-12));
  if (n == 0 || n > full || n < std::max<std::size_t>(lowest, 1)) {
    fail(ErrorCode::DimensionOutOfRange,
         "n = " + std::to_string(n) + " outside [" + std::to_string(lowest) + ", " +
             std::to_string(full) + "]");
  }
  HypothesisSpace hs;
  hs.kind_ = kind;
  hs.n_ = n;
  hs.R_ = R;
  if (kind == BasisKind::PiecewiseConstant) {
    hs.degree_ = 0;
    hs.knots_.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) hs.knots_[i] = R * static_cast<double>(i) / static_cast<double>(n);
    return hs;
  }
  if (degree < 0) fail(ErrorCode::InvalidArgument, "B-spline degree must be nonnegative");
  const auto p = static_cast<std::size_t>(degree);
  if (n < p + 1) {
    fail(ErrorCode::DimensionOutOfRange, "B-spline of degree " + std::to_string(degree) +
                                             " needs at least " + std::to_string(p + 1) + " functions");
  }
  hs.degree_ = degree;
  const std::size_t distinct = n - p + 1;
  hs.knots_.assign(p, 0.0);
  for (std::size_t j = 0; j < distinct; ++j) {
    hs.knots_.push_back(R * static_cast<double>(j) / static_cast<double>(distinct - 1));
  }
  hs.knots_.insert(hs.knots_.end(), p, R);
  return hs;
}

double HypothesisSpace::eval(std::size_t i, double r) const {
  if (i >= n_) fail(ErrorCode::DimensionMismatch, "basis index out of range");
  if (kind_ == BasisKind::PiecewiseConstant) {
    if (r < 0.0 || r > R_ * (1.0 + 1e-12)) return 0.0;
    const double w = R_ / static_cast<double>(n_);
    auto cell = static_cast<long>(std::ceil(r / w - 1e-9)) - 1;
    cell = std::clamp<long>(cell, 0, static_cast<long>(n_) - 1);
    return static_cast<std::size_t>(cell) == i ? 1.0 : 0.0;
  }
  return bspline(i, degree_, r);
}

// Nonzero basis functions on the knot span containing r (Piegl & Tiller A2.2),
// scattered into the requested index.
double HypothesisSpace::bspline(std::size_t i, int p, double r) const {
  if (r < 0.0 || r > R_ * (1.0 + 1e-12)) return 0.0;
  const auto& U = knots_;
  const auto pp = static_cast<std::size_t>(p);
  std::size_t span = n_ - 1;
  if (r < R_) {
    span = static_cast<std::size_t>(std::upper_bound(U.begin(), U.end(), r) - U.begin()) - 1;
    span = std::clamp(span, pp, n_ - 1);
  }
  if (i + pp < span || i > span) return 0.0;
  std::vector<double> N(pp + 1, 0.0), left(pp + 1, 0.0), right(pp + 1, 0.0);
  N[0] = 1.0;
  for (std::size_t j = 1; j <= pp; ++j) {
    left[j] = r - U[span + 1 - j];
    right[j] = U[span + j] - r;
    double saved = 0.0;
    for (std::size_t q = 0; q < j; ++q) {
      const double denom = right[q + 1] + left[j - q];
      const double temp = denom != 0.0 ? N[q] / denom : 0.0;
      N[q] = saved + right[q + 1] * temp;
      saved = left[j - q] * temp;
    }
    N[j] = saved;
  }
  return N[i + pp - span];
}

Matrix HypothesisSpace::evaluate(const Vector& r) const {
  Matrix P = Matrix::Zero(r.size(), static_cast<Eigen::Index>(n_));
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    for (std::size_t i = 0; i < n_; ++i) {
      P(k, static_cast<Eigen::Index>(i)) = eval(i, r[k]);
    }
  }
  return P;
}

Vector HypothesisSpace::combine(const Vector& c, const Vector& r) const {
  if (static_cast<std::size_t>(c.size()) != n_) {
    fail(ErrorCode::DimensionMismatch, "coefficient vector does not match the space dimension");
  }
  return evaluate(r) * c;
}

}  // namespace dartr
