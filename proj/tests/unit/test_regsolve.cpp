#include <cmath>
#include <random>

#include "dartr/regsolve.hpp"
#include "support.hpp"

using namespace dartr;
using dartr::test::random_psd;
using dartr::test::random_spd;
using dartr::test::random_vector;
using dartr::test::relative_diff;

namespace {

const RegularizerKind kAllKinds[] = {RegularizerKind::ProjectedL2small, RegularizerKind::ProjectedL2rho,
                                     RegularizerKind::SidaRkhs};

}  // namespace

TEST_CASE("gen_eig of a diagonal pencil") {
  const GenEigDecomposition d = gen_eig(Matrix{{1.0, 0.0}, {0.0, 6.0}}, Matrix{{1.0, 0.0}, {0.0, 2.0}});
  CHECK(d.lambda[0] == doctest::Approx(3.0));
  CHECK(d.lambda[1] == doctest::Approx(1.0));
  CHECK(d.rank == 2);
  CHECK(d.V(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(d.V(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("gen_eig eigenvectors have a positive dominant entry") {
  std::mt19937_64 rng(3);
  const Matrix A = random_psd(rng, 12, 12), B = random_spd(rng, 12);
  const GenEigDecomposition d = gen_eig(A, B);
  for (Eigen::Index j = 0; j < d.V.cols(); ++j) {
    Eigen::Index at = 0;
    d.V.col(j).cwiseAbs().maxCoeff(&at);
    CHECK(d.V(at, j) > 0.0);
  }
  for (Eigen::Index j = 1; j < d.lambda.size(); ++j) CHECK(d.lambda[j] <= d.lambda[j - 1]);
}

TEST_CASE("gen_eig residuals stay small up to n = 500") {
  std::mt19937_64 rng(21);
  for (Eigen::Index n : {5, 60, 200, 500}) {
    const Matrix A = random_psd(rng, n, n / 2 + 1), B = random_spd(rng, n);
    const GenEigDecomposition d = gen_eig(A, B);
    const Matrix residual = A * d.V - B * d.V * d.lambda.asDiagonal();
    CHECK(residual.norm() <= 1e-9 * A.norm() * std::sqrt(static_cast<double>(n)));
    CHECK(relative_diff(d.V.transpose() * B * d.V, Matrix::Identity(n, n)) < 1e-9);
    CHECK(relative_diff(d.BV, B * d.V) < 1e-12);
    CHECK(d.rank == static_cast<std::size_t>(n / 2 + 1));
  }
}

TEST_CASE("gen_eig rejects an indefinite basis matrix") {
  CHECK_THROWS_CODE(gen_eig(Matrix::Identity(2, 2), Matrix{{1.0, 0.0}, {0.0, -1.0}}), ErrorCode::NotPositiveDefinite);
  CHECK_THROWS_CODE(gen_eig(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), ErrorCode::DimensionMismatch);
}

TEST_CASE("rkhs_norm_matrix is the pseudo-inverse of the operator") {
  const GenEigDecomposition d = gen_eig(Matrix{{1.0, 1.0}, {1.0, 1.0}}, Matrix::Identity(2, 2));
  CHECK(d.rank == 1);
  CHECK(rkhs_norm_matrix(d).isApprox(Matrix::Constant(2, 2, 0.25)));
  const GenEigDecomposition diag = gen_eig(Matrix{{4.0, 0.0}, {0.0, 1.0}}, Matrix::Identity(2, 2));
  CHECK(rkhs_norm_matrix(diag).isApprox(Matrix{{0.25, 0.0}, {0.0, 1.0}}));
  CHECK_THROWS_CODE(rkhs_norm_matrix(gen_eig(Matrix::Zero(2, 2), Matrix::Identity(2, 2))), ErrorCode::AllZeroSpectrum);
}

TEST_CASE("rkhs_inverse_sqrt squares to the operator") {
  std::mt19937_64 rng(8);
  const Matrix A = random_psd(rng, 9, 9), B = random_spd(rng, 9);
  const GenEigDecomposition d = gen_eig(A, B);
  const Matrix S = rkhs_inverse_sqrt(d);
  const Matrix L = d.V * d.lambda.asDiagonal() * d.V.transpose();
  CHECK(relative_diff(S * S, L) < 1e-9);
  CHECK(relative_diff(S * rkhs_norm_matrix(d) * S, Matrix::Identity(9, 9)) < 1e-8);
}

TEST_CASE("spectral solutions of a diagonal system") {
  const SpectralSystem sys = SpectralSystem::from(Matrix{{4.0, 0.0}, {0.0, 1.0}}, Vector{{1.0, 1.0}}, Matrix::Identity(2, 2));
  const Vector l2 = solve_regularized(sys, RegularizerKind::ProjectedL2small, 1.0);
  const Vector L2 = solve_regularized(sys, RegularizerKind::ProjectedL2rho, 1.0);
  const Vector rk = solve_regularized(sys, RegularizerKind::SidaRkhs, 1.0);
  CHECK(l2[0] == doctest::Approx(0.2));
  CHECK(l2[1] == doctest::Approx(0.5));
  CHECK(L2.isApprox(l2));
  CHECK(rk[0] == doctest::Approx(1.0 / 4.25));
  CHECK(rk[1] == doctest::Approx(0.5));
  CHECK_THROWS_CODE(solve_regularized(sys, RegularizerKind::SidaRkhs, -1.0), ErrorCode::NegativeLambda);
}

TEST_CASE("spectral solutions match the normal equations") {
  std::mt19937_64 rng(31);
  const Eigen::Index n = 15;
  const Matrix A = random_spd(rng, n, 0.1), B = random_spd(rng, n);
  const Vector b = random_vector(rng, n);
  const SpectralSystem sys = SpectralSystem::from(A, b, B);
  const double lambda = 0.3;
  const Vector l2 = solve_regularized(sys, RegularizerKind::ProjectedL2small, lambda);
  CHECK(relative_diff((A + lambda * Matrix::Identity(n, n)) * l2, b) < 1e-10);
  const Vector L2 = solve_regularized(sys, RegularizerKind::ProjectedL2rho, lambda);
  CHECK(relative_diff((A + lambda * B) * L2, b) < 1e-10);
  const Vector rk = solve_regularized(sys, RegularizerKind::SidaRkhs, lambda);
  CHECK(relative_diff((A + lambda * rkhs_norm_matrix(sys.gen)) * rk, b) < 1e-9);
}

TEST_CASE("identity basis matrix makes the two projected norms coincide") {
  std::mt19937_64 rng(12);
  const Eigen::Index n = 10;
  const SpectralSystem sys = SpectralSystem::from(random_psd(rng, n, 7), random_vector(rng, n), Matrix::Identity(n, n));
  for (double lambda : {1e-4, 0.1, 5.0}) {
    CHECK(relative_diff(solve_regularized(sys, RegularizerKind::ProjectedL2rho, lambda),
                        solve_regularized(sys, RegularizerKind::ProjectedL2small, lambda)) < 1e-9);
  }
}

TEST_CASE("solutions stay in the retained eigenspace") {
  std::mt19937_64 rng(44);
  const Eigen::Index n = 12, r = 5;
  const Matrix A = random_psd(rng, n, r), B = random_spd(rng, n);
  const SpectralSystem sys = SpectralSystem::from(A, random_vector(rng, n), B);
  REQUIRE(sys.gen.rank == static_cast<std::size_t>(r));
  const Matrix null_dirs = sys.gen.BV.rightCols(n - r);
  for (auto kind : {RegularizerKind::ProjectedL2rho, RegularizerKind::SidaRkhs}) {
    const Vector c = solve_regularized(sys, kind, 0.01);
    CHECK((null_dirs.transpose() * c).norm() <= 1e-9 * c.norm());
  }
  const Vector c = solve_regularized(sys, RegularizerKind::ProjectedL2small, 0.01);
  CHECK((sys.sym->U.rightCols(n - r).transpose() * c).norm() <= 1e-9 * c.norm());
}

TEST_CASE("minimum-norm solve agrees with the spectral RKHS solve") {
  std::mt19937_64 rng(50);
  const Eigen::Index n = 14;
  const Matrix A = random_psd(rng, n, 9), B = random_spd(rng, n);
  const Vector b = A * random_vector(rng, n);
  const SpectralSystem sys = SpectralSystem::from(A, b, B);
  const Matrix S = rkhs_inverse_sqrt(sys.gen);
  for (double lambda : {1e-3, 0.2, 3.0}) {
    CHECK(relative_diff(solve_regularized_minnorm(A, b, S, lambda),
                        solve_regularized(sys, RegularizerKind::SidaRkhs, lambda)) < 1e-7);
  }
}

TEST_CASE("loss_value hand values") {
  const Matrix A{{2.0, 0.0}, {0.0, 1.0}};
  const Vector b{{2.0, 1.0}};
  CHECK(loss_value(A, b, Vector::Zero(2)) == doctest::Approx(3.0));
  CHECK(loss_value(A, b, Vector{{1.0, 1.0}}) == doctest::Approx(0.0).scale(1.0));
  CHECK(loss_value(A, b, Vector{{2.0, 1.0}}) == doctest::Approx(2.0));
  const SpectralSystem sys = SpectralSystem::from(A, b, Matrix::Identity(2, 2));
  CHECK(loss_value(sys, Vector::Zero(2)) == doctest::Approx(3.0));
}

TEST_CASE("loss is nonnegative and minimal at the least-squares fit") {
  std::mt19937_64 rng(60);
  const Eigen::Index n = 10;
  const Matrix A = random_psd(rng, n, 6);
  const Vector b = A * random_vector(rng, n);
  const SpectralSystem sys = SpectralSystem::from(A, b, Matrix::Identity(n, n));
  const Vector ls = solve_regularized(sys, RegularizerKind::ProjectedL2small, 0.0);
  CHECK(std::abs(loss_value(A, b, ls)) <= 1e-9 * b.squaredNorm());
  for (int trial = 0; trial < 20; ++trial) CHECK(loss_value(A, b, random_vector(rng, n)) >= -1e-9);
}

TEST_CASE("regularizer norms match their quadratic forms") {
  std::mt19937_64 rng(70);
  const Eigen::Index n = 8;
  const Matrix A = random_spd(rng, n, 0.05), B = random_spd(rng, n);
  const SpectralSystem sys = SpectralSystem::from(A, random_vector(rng, n), B);
  const Vector c = random_vector(rng, n);
  CHECK(regularizer_norm(sys, RegularizerKind::ProjectedL2small, c) == doctest::Approx(c.squaredNorm()));
  CHECK(regularizer_norm(sys, RegularizerKind::ProjectedL2rho, c) == doctest::Approx(c.dot(B * c)));
  CHECK(regularizer_norm(sys, RegularizerKind::SidaRkhs, c) ==
        doctest::Approx(c.dot(rkhs_norm_matrix(sys.gen) * c)).epsilon(1e-8));
}

TEST_CASE("loss grows and the norm shrinks with lambda") {
  std::mt19937_64 rng(80);
  const Eigen::Index n = 16;
  // Assembled data always have b in the range of A.
  const Matrix A = random_psd(rng, n, 12);
  const SpectralSystem sys = SpectralSystem::from(A, A * random_vector(rng, n), random_spd(rng, n));
  for (auto kind : kAllKinds) {
    double last_loss = -1.0, last_norm = std::numeric_limits<double>::infinity();
    for (double lambda = 1e-6; lambda < 1e3; lambda *= 3.0) {
      const Vector c = solve_regularized(sys, kind, lambda);
      const double loss = loss_value(sys, c), norm = regularizer_norm(sys, kind, c);
      CHECK(loss >= last_loss - 1e-10);
      CHECK(norm <= last_norm * (1.0 + 1e-10));
      last_loss = loss;
      last_norm = norm;
    }
  }
}

TEST_CASE("regularizer names round-trip") {
  for (auto kind : kAllKinds) CHECK(parse_regularizer(short_name(kind)) == kind);
  CHECK(parse_regularizer("rkhs") == RegularizerKind::SidaRkhs);
  CHECK(parse_regularizer("L2") == RegularizerKind::ProjectedL2rho);
  CHECK(parse_regularizer("l2") == RegularizerKind::ProjectedL2small);
  CHECK_THROWS_CODE(parse_regularizer("tv"), ErrorCode::ConfigError);
}

TEST_CASE("RKHS norm matrix equals the basis matrix when A equals B") {
  std::mt19937_64 rng(90);
  for (Eigen::Index n : {3, 10, 30}) {
    const Matrix B = random_spd(rng, n);
    CHECK(relative_diff(rkhs_norm_matrix(gen_eig(B, B)), B) < 1e-9);
  }
}
