#include "dartr/lcurve.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dartr/error.hpp"
#include "dartr/io.hpp"

namespace dartr {
namespace {

std::pair<double, double> range_of(const Vector& values, std::size_t rank, LambdaFloor floor) {
  if (rank == 0) fail(ErrorCode::AllZeroSpectrum, "no eigenvalue above the rank cutoff");
  const double top = values[0];
  double low = values[static_cast<Eigen::Index>(rank - 1)];
  if (floor == LambdaFloor::SmallestPositive) {
    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
      if (values[i] > 0.0) {
        low = values[i];
        break;
      }
    }
  }
  return {low, top};
}

double safe_log(double v) {
  static const double floor = std::log(std::numeric_limits<double>::min());
  return v > std::numeric_limits<double>::min() ? std::log(v) : floor;
}

// E(c) = sum (s_i g_i - p_i)^2 / s_i over the retained modes, which equals
// c^T A c - 2 c^T b + b^T A^+ b without the cancellation of the expanded form.
double spectral_loss(const Vector& coeffs, const Vector& projections, const Vector& values) {
  const Vector resid = values.cwiseProduct(coeffs) - projections;
  return resid.cwiseAbs2().cwiseQuotient(values).sum();
}

}  // namespace

std::pair<double, double> lambda_range(const GenEigDecomposition& dec, LambdaFloor floor) {
  return range_of(dec.lambda, dec.rank, floor);
}

std::pair<double, double> lambda_range(const SymEigDecomposition& dec, LambdaFloor floor) {
  return range_of(dec.sigma, dec.rank, floor);
}

std::pair<double, double> lambda_range(const SpectralSystem& sys, RegularizerKind kind, LambdaFloor floor) {
  if (kind == RegularizerKind::ProjectedL2small) {
    if (!sys.sym) fail(ErrorCode::InvalidArgument, "l2 regularizer needs the symmetric decomposition");
    return lambda_range(*sys.sym, floor);
  }
  return lambda_range(sys.gen, floor);
}

Vector parametric_curvature(const Vector& xs, const Vector& ys, const Vector& t) {
  const Eigen::Index n = xs.size();
  if (ys.size() != n || t.size() != n) fail(ErrorCode::DimensionMismatch, "curve arrays differ in length");
  Vector kappa = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double h = 0.5 * (t[i + 1] - t[i - 1]);
    const double dx = (xs[i + 1] - xs[i - 1]) / (2.0 * h);
    const double dy = (ys[i + 1] - ys[i - 1]) / (2.0 * h);
    const double ddx = (xs[i + 1] - 2.0 * xs[i] + xs[i - 1]) / (h * h);
    const double ddy = (ys[i + 1] - 2.0 * ys[i] + ys[i - 1]) / (h * h);
    const double speed2 = dx * dx + dy * dy;
    kappa[i] = speed2 > 0.0 ? (dx * ddy - dy * ddx) / std::pow(speed2, 1.5) : 0.0;
  }
  return kappa;
}

LCurve build_lcurve(const SpectralSystem& sys, RegularizerKind kind, std::size_t n_lambda, LambdaFloor floor,
                    LCurveLoss loss) {
  if (n_lambda < 5) fail(ErrorCode::InvalidArgument, "an L-curve needs at least 5 lambda values");
  if (loss == LCurveLoss::Full && !(sys.data_energy && std::isfinite(*sys.data_energy))) {
    fail(ErrorCode::InvalidArgument, "the full-loss L-curve needs the data energy");
  }
  const auto [lo, hi] = lambda_range(sys, kind, floor);
  if (!(hi > lo)) {
    fail(ErrorCode::DegenerateCurve, "spectral range collapses to lambda = " + std::to_string(hi));
  }
  const auto n = static_cast<Eigen::Index>(n_lambda);
  LCurve curve;
  curve.kind = kind;
  curve.lambdas.resize(n);
  curve.loss.resize(n);
  curve.norm.resize(n);
  curve.xs.resize(n);
  curve.ys.resize(n);
  Vector t(n);
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / static_cast<double>(n - 1);

  // Projections of b onto the retained modes, shared by every lambda.
  Vector values, projections;
  Matrix to_coeffs;
  if (kind == RegularizerKind::ProjectedL2small) {
    const auto& d = *sys.sym;
    const auto k = static_cast<Eigen::Index>(d.rank);
    values = d.sigma.head(k);
    projections = d.U.leftCols(k).transpose() * sys.b;
    to_coeffs = d.U.leftCols(k).transpose();
  } else {
    const auto k = static_cast<Eigen::Index>(sys.gen.rank);
    values = sys.gen.lambda.head(k);
    projections = sys.gen.V.leftCols(k).transpose() * sys.b;
    to_coeffs = sys.gen.BV.leftCols(k).transpose();
  }

  // Full loss = excess loss + (C_N^f - b^T A^+ b).
  const double offset =
      loss == LCurveLoss::Full ? *sys.data_energy - projections.cwiseAbs2().cwiseQuotient(values).sum() : 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = log_lo + step * static_cast<double>(i);
    const double lambda = i == n - 1 ? hi : (i == 0 ? lo : std::exp(t[i]));
    curve.lambdas[i] = lambda;
    const Vector c = solve_regularized(sys, kind, lambda);
    curve.loss[i] = spectral_loss(to_coeffs * c, projections, values) + offset;
    curve.norm[i] = regularizer_norm(sys, kind, c);
    curve.xs[i] = safe_log(curve.loss[i]);
    curve.ys[i] = safe_log(curve.norm[i]);
  }
  curve.curvature = parametric_curvature(curve.xs, curve.ys, t);
  return curve;
}

LambdaChoice select_lambda(const LCurve& curve) {
  const std::size_t n = curve.size();
  if (n < 5) fail(ErrorCode::DegenerateCurve, "fewer than three interior L-curve points");
  LambdaChoice best;
  double best_kappa = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double k = curve.curvature[static_cast<Eigen::Index>(i)];
    if (std::isnan(k)) continue;
    if (!found || k >= best_kappa) {
      best_kappa = k;
      best.index = i;
      found = true;
    }
  }
  if (!found) fail(ErrorCode::DegenerateCurve, "curvature undefined at every interior point");
  best.lambda = curve.lambdas[static_cast<Eigen::Index>(best.index)];
  return best;
}

void write_lcurve_csv(std::ostream& out, const LCurve& curve) {
  out << "lambda,loss,norm,curvature\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out << format_double(curve.lambdas[j]) << ',' << format_double(curve.loss[j]) << ','
        << format_double(curve.norm[j]) << ',' << format_double(curve.curvature[j]) << '\n';
  }
}

}  // namespace dartr
