#pragma once

#include <cstddef>
#include <ostream>
#include <utility>

#include "dartr/grid.hpp"
#include "dartr/regsolve.hpp"

namespace dartr {

/// Which eigenvalue sets the lower end of the lambda scan.
enum class LambdaFloor {
  SmallestRetained,  ///< smallest eigenvalue above the rank cutoff
  SmallestPositive,  ///< smallest strictly positive eigenvalue
};

/// Quantity on the horizontal axis of the L-curve.
enum class LCurveLoss {
  Excess,  ///< c^T A c - 2 c^T b + b^T A^+ b, zero at the least-squares fit
  Full,    ///< c^T A c - 2 c^T b + C_N^f, the mean squared residual
};

inline constexpr std::size_t kDefaultLambdaCount = 40;

struct LCurve {
  RegularizerKind kind = RegularizerKind::SidaRkhs;
  Vector lambdas;    ///< geometric, strictly increasing
  Vector loss;       ///< E(c_lambda)
  Vector norm;       ///< R(c_lambda)
  Vector xs;         ///< log E, clamped at log(DBL_MIN)
  Vector ys;         ///< log R, clamped at log(DBL_MIN)
  Vector curvature;  ///< NaN at the two endpoints

  std::size_t size() const { return static_cast<std::size_t>(lambdas.size()); }
};

/// (lambda_min, lambda_max) from the generalized spectrum.
/// Throws AllZeroSpectrum when the rank is zero.
std::pair<double, double> lambda_range(const GenEigDecomposition& dec,
                                       LambdaFloor floor = LambdaFloor::SmallestRetained);
std::pair<double, double> lambda_range(const SymEigDecomposition& dec,
                                       LambdaFloor floor = LambdaFloor::SmallestRetained);

/// Range matching a regularizer: the l2 kind scans the spectrum of A, the
/// others the generalized spectrum of (A, B).
std::pair<double, double> lambda_range(const SpectralSystem& sys, RegularizerKind kind,
                                       LambdaFloor floor = LambdaFloor::SmallestRetained);

/// Signed curvature (x'y'' - y'x'') / (x'^2 + y'^2)^{3/2} with centered
/// differences in a uniform parameter t. Endpoints are NaN; a stationary
/// point (zero speed) has curvature 0.
Vector parametric_curvature(const Vector& xs, const Vector& ys, const Vector& t);

/// Throws InvalidArgument for n_lambda < 5 or for a Full loss without
/// sys.data_energy, and DegenerateCurve when the range collapses to a single value.
LCurve build_lcurve(const SpectralSystem& sys, RegularizerKind kind,
                    std::size_t n_lambda = kDefaultLambdaCount,
                    LambdaFloor floor = LambdaFloor::SmallestRetained, LCurveLoss loss = LCurveLoss::Excess);

struct LambdaChoice {
  double lambda = 0.0;
  std::size_t index = 0;
};

/// Interior maximizer of the curvature, ties to the larger lambda.
/// Throws DegenerateCurve with fewer than three interior points.
LambdaChoice select_lambda(const LCurve& curve);

/// CSV with header lambda,loss,norm,curvature.
void write_lcurve_csv(std::ostream& out, const LCurve& curve);

}  // namespace dartr
