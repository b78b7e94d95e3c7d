#include "dartr/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dartr/error.hpp"

namespace dartr {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// Index hull of the exact nonzeros of u or du.
SampleSupport nonzero_hull(const Vector& u, const Vector& du) {
  SampleSupport s;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] != 0.0 || du[i] != 0.0) {
      if (s.empty) s.first = static_cast<std::size_t>(i);
      s.empty = false;
      s.last = static_cast<std::size_t>(i);
    }
  }
  return s;
}

// Per-pair discrete operator columns on the shifted lattice x_i +- r_l.
class PairColumns {
 public:
  PairColumns(OperatorKind op, const Vector& u, double dx)
      : op_(op), u_(u), du_(op == OperatorKind::NonlinearMeanField ? finite_difference_derivative(u, dx)
                                                                   : Vector::Zero(u.size())) {
    hull_ = nonzero_hull(u_, du_);
  }

  bool empty() const { return hull_.empty; }

  /// Rows [row_begin, row_end) that can carry a nonzero g for shifts up to L.
  void active_rows(std::size_t L, std::size_t& row_begin, std::size_t& row_end) const {
    const auto J = static_cast<std::size_t>(u_.size());
    row_begin = hull_.first > L ? hull_.first - L : 0;
    row_end = std::min(J, hull_.last + L + 1);
  }

  /// g[u](x_i, s * dx) for a signed shift s.
  double g(std::ptrdiff_t i, std::ptrdiff_t s) const {
    const double ushift = at(u_, i + s);
    switch (op_) {
      case OperatorKind::LinearIntegral:
        return ushift;
      case OperatorKind::Nonlocal:
        return ushift - at(u_, i);
      case OperatorKind::NonlinearMeanField:
        return at(du_, i + s) * at(u_, i) + ushift * at(du_, i);
    }
    return 0.0;
  }

 private:
  static double at(const Vector& v, std::ptrdiff_t i) {
    return (i >= 0 && i < v.size()) ? v[i] : 0.0;
  }

  OperatorKind op_;
  const Vector& u_;
  Vector du_;
  SampleSupport hull_;
};

std::size_t shifts_for(double R, double dx) {
  return static_cast<std::size_t>(std::floor(R / dx + kCommensurabilityTol));
}

}  // namespace

double robust_noise_scale(const Vector& v) {
  if (v.size() < 3) return 0.0;
  std::vector<double> diffs(static_cast<std::size_t>(v.size() - 1));
  for (Eigen::Index i = 0; i + 1 < v.size(); ++i) diffs[static_cast<std::size_t>(i)] = v[i + 1] - v[i];
  const double center = median(diffs);
  for (double& d : diffs) d = std::abs(d - center);
  return 1.4826 * median(std::move(diffs)) / std::sqrt(2.0);
}

SampleSupport estimate_sample_support(const Vector& v) {
  SampleSupport s;
  if (v.size() == 0) return s;
  const double peak = v.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) return s;
  const double threshold = std::max(3.0 * robust_noise_scale(v), 1e-12 * peak);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > threshold) {
      if (s.empty) s.first = static_cast<std::size_t>(i);
      s.empty = false;
      s.last = static_cast<std::size_t>(i);
    }
  }
  return s;
}

Vector finite_difference_derivative(const Vector& u, double dx) {
  Vector du = Vector::Zero(u.size());
  const SampleSupport hull = estimate_sample_support(u);
  if (hull.empty) return du;
  const auto a = static_cast<Eigen::Index>(hull.first);
  const auto b = static_cast<Eigen::Index>(hull.last);
  if (a == b) return du;
  for (Eigen::Index i = a + 1; i < b; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
  if (b - a >= 2) {
    du[a] = (-3.0 * u[a] + 4.0 * u[a + 1] - u[a + 2]) / (2.0 * dx);
    du[b] = (3.0 * u[b] - 4.0 * u[b - 1] + u[b - 2]) / (2.0 * dx);
  } else {
    du[a] = du[b] = (u[b] - u[a]) / dx;
  }
  return du;
}

DiscreteMeasure exploration_measure(const Dataset& ds, double R0) {
  if (!(R0 > 0.0)) fail(ErrorCode::InvalidArgument, "exploration radius must be positive");
  const double dx = ds.x_grid.dx();
  const std::size_t L = shifts_for(R0, dx);
  if (L < 2) fail(ErrorCode::InvalidArgument, "exploration radius spans fewer than two cells");
  Vector weights = Vector::Zero(static_cast<Eigen::Index>(L));
  for (Eigen::Index k = 0; k < ds.u.cols(); ++k) {
    const Vector u = ds.u.col(k);
    const PairColumns cols(ds.op, u, dx);
    if (cols.empty()) continue;
    std::size_t begin = 0, end = 0;
    cols.active_rows(L, begin, end);
    for (std::size_t l = 1; l <= L; ++l) {
      const auto s = static_cast<std::ptrdiff_t>(l);
      double acc = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto ii = static_cast<std::ptrdiff_t>(i);
        acc += std::abs(cols.g(ii, s)) + std::abs(cols.g(ii, -s));
      }
      weights[static_cast<Eigen::Index>(l - 1)] += acc;
    }
  }
  UniformGrid r_grid = make_uniform_grid(dx, static_cast<double>(L) * dx, dx);
  return DiscreteMeasure::normalized(std::move(r_grid), std::move(weights));
}

double estimate_support(const Dataset& ds, const DiscreteMeasure& rho) {
  if (rho.size() == 0) fail(ErrorCode::InvalidArgument, "empty exploration measure");
  const Vector& x = ds.x_grid.points();
  const double dx = ds.x_grid.dx();
  double gap = 0.0;
  for (Eigen::Index k = 0; k < ds.u.cols(); ++k) {
    const SampleSupport su = estimate_sample_support(ds.u.col(k));
    const SampleSupport sf = estimate_sample_support(ds.f.col(k));
    if (sf.empty) {
      fail(ErrorCode::DegenerateSupport, "output " + std::to_string(k + 1) + " has empty support");
    }
    if (su.empty) continue;
    const double left = std::abs(x[static_cast<Eigen::Index>(sf.first)] - x[static_cast<Eigen::Index>(su.first)]);
    const double right = std::abs(x[static_cast<Eigen::Index>(sf.last)] - x[static_cast<Eigen::Index>(su.last)]);
    gap = std::max({gap, left, right});
  }
  const double r_rho = rho.max_positive_point();
  const double range = gap < dx ? r_rho : std::min(r_rho, gap);
  const double R = 1.1 * range;
  const double cells = std::max(2.0, std::ceil(R / dx - kCommensurabilityTol));
  return cells * dx;
}

RegressionData assemble_regression_data(const Dataset& ds, double R) {
  const double dx = ds.x_grid.dx();
  const std::size_t L = commensurate_cells(R, dx);
  if (L < 2) fail(ErrorCode::InvalidArgument, "support bound spans fewer than two cells");
  if (ds.f.rows() != ds.u.rows() || ds.f.cols() != ds.u.cols() ||
      static_cast<std::size_t>(ds.u.rows()) != ds.x_grid.size()) {
    fail(ErrorCode::DimensionMismatch, "dataset matrices do not match the x-grid");
  }
  const auto n = static_cast<Eigen::Index>(L);
  const double scale = dx / static_cast<double>(ds.num_pairs());
  Matrix G = Matrix::Zero(n, n);
  Vector gNf = Vector::Zero(n);
  Vector weights = Vector::Zero(n);

  for (Eigen::Index k = 0; k < ds.u.cols(); ++k) {
    const Vector u = ds.u.col(k);
    const PairColumns cols(ds.op, u, dx);
    if (cols.empty()) continue;
    std::size_t begin = 0, end = 0;
    cols.active_rows(L, begin, end);
    const auto rows = static_cast<Eigen::Index>(end - begin);
    Matrix Phi(rows, n);
    for (Eigen::Index l = 0; l < n; ++l) {
      const auto s = static_cast<std::ptrdiff_t>(l + 1);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < rows; ++i) {
        const auto ii = static_cast<std::ptrdiff_t>(begin) + i;
        const double plus = cols.g(ii, s);
        const double minus = cols.g(ii, -s);
        Phi(i, l) = plus + minus;
        acc += std::abs(plus) + std::abs(minus);
      }
      weights[l] += acc;
    }
    G.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose(), scale);
    gNf.noalias() += scale * (Phi.transpose() * ds.f.col(k).segment(static_cast<Eigen::Index>(begin), rows));
  }
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();

  // Bins at roundoff level (e.g. u(pi) = sin(pi) != 0) count as unexplored.
  const double floor = 1e-12 * weights.maxCoeff();
  Eigen::Index kept = n;
  while (kept > 0 && weights[kept - 1] <= floor) --kept;
  if (kept < 2) fail(ErrorCode::EmptyExploration, "fewer than two explored r-nodes");

  RegressionData rd;
  rd.r_grid = make_uniform_grid(dx, static_cast<double>(kept) * dx, dx);
  rd.G = G.topLeftCorner(kept, kept);
  rd.gNf = gNf.head(kept);
  rd.rho = DiscreteMeasure::normalized(rd.r_grid, weights.head(kept));
  rd.data_energy = ds.f.squaredNorm() * scale;
  return rd;
}

HypothesisSpace full_resolution_space(const RegressionData& rd) {
  return build_hypothesis_space(BasisKind::PiecewiseConstant, rd.size(), rd.r_grid.x_max(), rd.dx());
}

RegressionTriplet assemble_triplet(const RegressionData& rd, const HypothesisSpace& hs) {
  const double dx = rd.dx();
  if (std::abs(hs.support_bound() - rd.r_grid.x_max()) > 1e-9 * std::max(1.0, hs.support_bound())) {
    fail(ErrorCode::DimensionMismatch, "hypothesis space is not defined on the data's r-interval");
  }
  const Matrix P = hs.evaluate(rd.r_grid.points());
  RegressionTriplet t;
  t.A = (dx * dx) * (P.transpose() * rd.G * P);
  t.A = 0.5 * (t.A + t.A.transpose()).eval();
  t.b = dx * (P.transpose() * rd.gNf);
  t.B = dx * (P.transpose() * rd.rho.weights().asDiagonal() * P);
  t.B = 0.5 * (t.B + t.B.transpose()).eval();
  t.space = hs;
  t.rho = rd.rho;
  t.data_energy = rd.data_energy;

  const double norm = t.B.norm();
  double smallest = 0.0;
  if (t.B.isDiagonal(0.0)) {
    smallest = t.B.diagonal().minCoeff();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(t.B, Eigen::EigenvaluesOnly);
    smallest = eig.eigenvalues().minCoeff();
  }
  if (!(norm > 0.0) || smallest <= 1e-12 * norm) {
    fail(ErrorCode::SingularBasis, "basis Gram matrix is singular on the exploration measure");
  }
  return t;
}

}  // namespace dartr
