#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dartr/assembly.hpp"
#include "dartr/lcurve.hpp"
#include "support.hpp"

using namespace dartr;
using dartr::test::random_psd;
using dartr::test::random_spd;
using dartr::test::random_vector;

namespace {

LCurve curve_from_kappa(const Vector& kappa) {
  LCurve c;
  c.lambdas = Vector::LinSpaced(kappa.size(), 1.0, static_cast<double>(kappa.size()));
  c.curvature = kappa;
  return c;
}

SpectralSystem random_system(std::uint64_t seed, Eigen::Index n = 20) {
  std::mt19937_64 rng(seed);
  const Matrix A = random_psd(rng, n, n);
  const Matrix B = random_spd(rng, n);
  Vector b = A * random_vector(rng, n) + 0.05 * random_vector(rng, n);
  return SpectralSystem::from(A, b, B);
}

}  // namespace

TEST_CASE("lambda range spans the retained spectrum") {
  GenEigDecomposition d;
  d.lambda = Vector{{4.0, 1.0, 1e-20}};
  d.rank = 2;
  const auto [lo, hi] = lambda_range(d);
  CHECK(lo == 1.0);
  CHECK(hi == 4.0);
  CHECK(lambda_range(d, LambdaFloor::SmallestPositive).first == 1e-20);
  d.rank = 0;
  CHECK_THROWS_CODE(lambda_range(d), ErrorCode::AllZeroSpectrum);
}

TEST_CASE("curvature of a straight line is zero") {
  const Vector t = Vector::LinSpaced(30, 0.0, 3.0);
  const Vector kappa = parametric_curvature(2.0 * t, -0.5 * t + Vector::Ones(30), t);
  CHECK(std::isnan(kappa[0]));
  CHECK(std::isnan(kappa[29]));
  for (Eigen::Index i = 1; i < 29; ++i) CHECK(kappa[i] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("curvature of a circle is the inverse radius") {
  const double r = 2.5;
  const Vector t = Vector::LinSpaced(200, 0.0, 2.0 * std::numbers::pi);
  const Vector xs = r * t.array().cos(), ys = r * t.array().sin();
  const Vector kappa = parametric_curvature(xs, ys, t);
  for (Eigen::Index i = 1; i < 199; ++i) CHECK(kappa[i] == doctest::Approx(1.0 / r).epsilon(0.05));
  const Vector reversed = parametric_curvature(xs, -ys, t);
  CHECK(reversed[10] == doctest::Approx(-1.0 / r).epsilon(0.05));
}

TEST_CASE("curvature rejects arrays of different length") {
  CHECK_THROWS_CODE(parametric_curvature(Vector::Zero(5), Vector::Zero(4), Vector::Zero(5)), ErrorCode::DimensionMismatch);
}

TEST_CASE("select_lambda picks the interior curvature peak") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const LambdaChoice c = select_lambda(curve_from_kappa(Vector{{nan, 0.1, 0.9, 0.3, 0.2, nan}}));
  CHECK(c.index == 2);
  CHECK(c.lambda == 3.0);
}

TEST_CASE("select_lambda breaks ties toward the larger lambda") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(select_lambda(curve_from_kappa(Vector{{nan, 0.5, 0.2, 0.5, 0.1, nan}})).index == 3);
  CHECK_THROWS_CODE(select_lambda(curve_from_kappa(Vector{{nan, 1.0, 2.0, nan}})), ErrorCode::DegenerateCurve);
  CHECK_THROWS_CODE(select_lambda(curve_from_kappa(Vector::Constant(6, nan))), ErrorCode::DegenerateCurve);
}

TEST_CASE("L-curve loss rises and norm falls along the scan") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SpectralSystem sys = random_system(seed);
    for (auto kind : {RegularizerKind::ProjectedL2small, RegularizerKind::ProjectedL2rho, RegularizerKind::SidaRkhs}) {
      const LCurve c = build_lcurve(sys, kind);
      REQUIRE(c.size() == kDefaultLambdaCount);
      const auto [lo, hi] = lambda_range(sys, kind);
      CHECK(c.lambdas[0] == lo);
      CHECK(c.lambdas[c.lambdas.size() - 1] == hi);
      for (Eigen::Index i = 1; i < c.lambdas.size(); ++i) {
        CHECK(c.lambdas[i] > c.lambdas[i - 1]);
        CHECK(c.loss[i] >= c.loss[i - 1] * (1.0 - 1e-9));
        CHECK(c.norm[i] <= c.norm[i - 1] * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("L-curve choice is invariant to rescaling the data") {
  const SpectralSystem sys = random_system(9);
  const SpectralSystem scaled = SpectralSystem::from(sys.A, 7.0 * sys.b, sys.B);
  for (auto kind : {RegularizerKind::ProjectedL2small, RegularizerKind::ProjectedL2rho, RegularizerKind::SidaRkhs}) {
    CHECK(select_lambda(build_lcurve(sys, kind)).index == select_lambda(build_lcurve(scaled, kind)).index);
  }
}

TEST_CASE("full-loss L-curve shifts the loss by a constant") {
  SpectralSystem sys = random_system(4);
  CHECK_THROWS_CODE(build_lcurve(sys, RegularizerKind::SidaRkhs, 40, LambdaFloor::SmallestRetained, LCurveLoss::Full),
                    ErrorCode::InvalidArgument);
  sys.data_energy = 50.0;
  const LCurve excess = build_lcurve(sys, RegularizerKind::SidaRkhs);
  const LCurve full = build_lcurve(sys, RegularizerKind::SidaRkhs, 40, LambdaFloor::SmallestRetained, LCurveLoss::Full);
  const Vector shift = full.loss - excess.loss;
  CHECK(shift.maxCoeff() - shift.minCoeff() <= 1e-9 * std::abs(shift[0]));
  CHECK(full.norm.isApprox(excess.norm));
}

TEST_CASE("L-curve argument checks") {
  const SpectralSystem sys = random_system(5, 6);
  CHECK_THROWS_CODE(build_lcurve(sys, RegularizerKind::SidaRkhs, 4), ErrorCode::InvalidArgument);
  const SpectralSystem flat = SpectralSystem::from(Matrix::Identity(3, 3), Vector::Ones(3), Matrix::Identity(3, 3));
  CHECK_THROWS_CODE(build_lcurve(flat, RegularizerKind::ProjectedL2rho), ErrorCode::DegenerateCurve);
}

TEST_CASE("noisy linear data select a lambda inside the scan") {
  const double dx = 0.05;
  const Dataset ds = generate_dataset(OperatorKind::LinearIntegral, KernelSpec::gaussian(),
                                      standard_u_set(OperatorKind::LinearIntegral), make_uniform_grid(-40, 40, dx), 1.0, 77);
  const DiscreteMeasure rho = exploration_measure(ds, 10.0);
  const RegressionData rd = assemble_regression_data(ds, estimate_support(ds, rho));
  const RegressionTriplet t = assemble_triplet(rd, full_resolution_space(rd));
  const SpectralSystem sys = SpectralSystem::from(t.A, t.b, t.B);
  for (auto kind : {RegularizerKind::ProjectedL2small, RegularizerKind::ProjectedL2rho, RegularizerKind::SidaRkhs}) {
    const LCurve c = build_lcurve(sys, kind);
    const LambdaChoice choice = select_lambda(c);
    INFO(short_name(kind), " index ", choice.index);
    CHECK(choice.index >= 2);
    CHECK(choice.index + 3 <= c.size());
    CHECK(c.curvature[static_cast<Eigen::Index>(choice.index)] > 0.0);
  }
}

TEST_CASE("L-curve CSV has one row per lambda") {
  const LCurve c = build_lcurve(random_system(6, 8), RegularizerKind::ProjectedL2rho, 7);
  std::ostringstream out;
  write_lcurve_csv(out, c);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "lambda,loss,norm,curvature");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 7);
}
