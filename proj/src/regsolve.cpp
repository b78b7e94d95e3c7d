#include "dartr/regsolve.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "dartr/error.hpp"

namespace dartr {
namespace {

void normalize_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

bool lexicographic_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

// Order indices by eigenvalue (descending); near-equal eigenvalues are
// ordered by their normalized eigenvectors.
std::vector<Eigen::Index> spectral_order(const Vector& values, const Matrix& vectors) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return values[l] > values[r]; });
  const double scale = values.size() > 0 ? std::max(values.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  const double tie = 1e-13 * scale;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() && values[order[stop - 1]] - values[order[stop]] <= tie) ++stop;
    if (stop - start > 1) {
      std::sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(stop), [&](Eigen::Index l, Eigen::Index r) {
                  return lexicographic_less(vectors.col(l), vectors.col(r));
                });
    }
    start = stop;
  }
  return order;
}

std::size_t count_rank(const Vector& values, double rank_tol) {
  if (values.size() == 0 || !(values[0] > 0.0)) return 0;
  const double cut = rank_tol * values[0];
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(values.size()) && values[static_cast<Eigen::Index>(r)] > cut) ++r;
  return r;
}

void check_square(const Matrix& M, const char* what) {
  if (M.rows() != M.cols()) fail(ErrorCode::DimensionMismatch, std::string(what) + " is not square");
}

}  // namespace

double GenEigDecomposition::cutoff() const {
  return lambda.size() > 0 ? rank_tol * std::max(lambda[0], 0.0) : 0.0;
}

GenEigDecomposition gen_eig(const Matrix& A, const Matrix& B, double rank_tol) {
  check_square(A, "A");
  check_square(B, "B");
  if (A.rows() != B.rows()) fail(ErrorCode::DimensionMismatch, "A and B differ in size");
  const Eigen::Index n = A.rows();

  Eigen::LLT<Matrix> chol(B);
  if (chol.info() != Eigen::Success || (chol.matrixLLT().diagonal().array() <= 0.0).any()) {
    fail(ErrorCode::NotPositiveDefinite, "basis matrix B is not positive definite");
  }
  // C = L^{-1} A L^{-T}
  Matrix C = chol.matrixL().solve(A);
  C = chol.matrixL().solve(C.transpose()).transpose();
  C = 0.5 * (C + C.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "symmetric eigensolver failed");
  Matrix V = chol.matrixU().solve(eig.eigenvectors());
  for (Eigen::Index j = 0; j < n; ++j) normalize_sign(V.col(j));

  const auto order = spectral_order(eig.eigenvalues(), V);
  GenEigDecomposition dec;
  dec.rank_tol = rank_tol;
  dec.V.resize(n, n);
  dec.lambda.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    dec.V.col(j) = V.col(order[static_cast<std::size_t>(j)]);
    dec.lambda[j] = eig.eigenvalues()[order[static_cast<std::size_t>(j)]];
  }
  dec.BV = B * dec.V;
  dec.rank = count_rank(dec.lambda, rank_tol);
  return dec;
}

SymEigDecomposition sym_eig(const Matrix& A, double rank_tol) {
  check_square(A, "A");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()));
  if (eig.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "symmetric eigensolver failed");
  Matrix U = eig.eigenvectors();
  for (Eigen::Index j = 0; j < U.cols(); ++j) normalize_sign(U.col(j));
  const auto order = spectral_order(eig.eigenvalues(), U);
  SymEigDecomposition dec;
  dec.rank_tol = rank_tol;
  dec.U.resize(U.rows(), U.cols());
  dec.sigma.resize(U.cols());
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    dec.U.col(j) = U.col(order[static_cast<std::size_t>(j)]);
    dec.sigma[j] = eig.eigenvalues()[order[static_cast<std::size_t>(j)]];
  }
  dec.rank = count_rank(dec.sigma, rank_tol);
  return dec;
}

Matrix rkhs_norm_matrix(const GenEigDecomposition& dec) {
  if (dec.rank == 0) fail(ErrorCode::AllZeroSpectrum, "no eigenvalue above the rank cutoff");
  const auto r = static_cast<Eigen::Index>(dec.rank);
  const auto W = dec.BV.leftCols(r);
  Matrix M = W * dec.lambda.head(r).cwiseInverse().asDiagonal() * W.transpose();
  return 0.5 * (M + M.transpose());
}

Matrix rkhs_inverse_sqrt(const GenEigDecomposition& dec) {
  if (dec.rank == 0) fail(ErrorCode::AllZeroSpectrum, "no eigenvalue above the rank cutoff");
  const auto r = static_cast<Eigen::Index>(dec.rank);
  const auto Vr = dec.V.leftCols(r);
  Matrix M = Vr * dec.lambda.head(r).asDiagonal() * Vr.transpose();
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "square-root eigensolver failed");
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::ProjectedL2small: return "ProjectedL2small";
    case RegularizerKind::ProjectedL2rho: return "ProjectedL2rho";
    case RegularizerKind::SidaRkhs: return "SidaRkhs";
  }
  return "Unknown";
}

std::string_view short_name(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::ProjectedL2small: return "l2";
    case RegularizerKind::ProjectedL2rho: return "L2";
    case RegularizerKind::SidaRkhs: return "rkhs";
  }
  return "?";
}

RegularizerKind parse_regularizer(std::string_view name) {
  // l2 and L2 differ only by case, so match those exactly first.
  if (name == "l2" || name == "ProjectedL2small") return RegularizerKind::ProjectedL2small;
  if (name == "L2" || name == "ProjectedL2rho") return RegularizerKind::ProjectedL2rho;
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "rkhs" || s == "sidarkhs" || s == "sida-rkhs") return RegularizerKind::SidaRkhs;
  fail(ErrorCode::ConfigError, "unknown regularizer '" + std::string(name) + "'");
}

SpectralSystem SpectralSystem::from(const Matrix& A, const Vector& b, const Matrix& B,
                                    double rank_tol, bool with_sym) {
  if (b.size() != A.rows()) fail(ErrorCode::DimensionMismatch, "b does not match A");
  SpectralSystem sys;
  sys.A = A;
  sys.b = b;
  sys.B = B;
  sys.gen = gen_eig(A, B, rank_tol);
  if (with_sym) sys.sym = sym_eig(A, rank_tol);
  return sys;
}

Vector solve_regularized(const SpectralSystem& sys, RegularizerKind kind, double lambda) {
  if (lambda < 0.0 || std::isnan(lambda)) fail(ErrorCode::NegativeLambda, "lambda must be nonnegative");
  if (kind == RegularizerKind::ProjectedL2small) {
    if (!sys.sym) fail(ErrorCode::InvalidArgument, "l2 regularizer needs the symmetric decomposition");
    const auto& d = *sys.sym;
    const auto k = static_cast<Eigen::Index>(d.rank);
    const Vector proj = d.U.leftCols(k).transpose() * sys.b;
    const Vector denom = d.sigma.head(k).array() + lambda;
    return d.U.leftCols(k) * proj.cwiseQuotient(denom);
  }
  const auto& d = sys.gen;
  const auto k = static_cast<Eigen::Index>(d.rank);
  const Vector proj = d.V.leftCols(k).transpose() * sys.b;
  const Vector lam = d.lambda.head(k);
  Vector denom;
  if (kind == RegularizerKind::ProjectedL2rho) {
    denom = lam.array() + lambda;
  } else {
    denom = lam.array() + lambda / lam.array();
  }
  return d.V.leftCols(k) * proj.cwiseQuotient(denom);
}

Vector solve_regularized_minnorm(const Matrix& A, const Vector& b, const Matrix& S, double lambda) {
  if (lambda < 0.0 || std::isnan(lambda)) fail(ErrorCode::NegativeLambda, "lambda must be nonnegative");
  if (A.rows() != S.rows() || b.size() != A.rows()) {
    fail(ErrorCode::DimensionMismatch, "min-norm system dimensions disagree");
  }
  Matrix M = S * A * S;
  M = 0.5 * (M + M.transpose()).eval();
  M.diagonal().array() += lambda;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
  const Vector ct = cod.solve(S * b);
  return S * ct;
}

double loss_value(const Matrix& A, const Vector& b, const Vector& c, double rank_tol) {
  if (A.rows() != A.cols() || b.size() != A.rows() || c.size() != A.rows()) {
    fail(ErrorCode::DimensionMismatch, "loss_value: dimensions disagree");
  }
  const SymEigDecomposition d = sym_eig(A, rank_tol);
  const auto k = static_cast<Eigen::Index>(d.rank);
  const Vector proj = d.U.leftCols(k).transpose() * b;
  const double bAb = proj.cwiseAbs2().cwiseQuotient(d.sigma.head(k)).sum();
  return c.dot(A * c) - 2.0 * c.dot(b) + bAb;
}

double loss_value(const SpectralSystem& sys, const Vector& c) {
  if (!sys.sym) return loss_value(sys.A, sys.b, c, sys.gen.rank_tol);
  if (c.size() != sys.A.rows()) fail(ErrorCode::DimensionMismatch, "loss_value: dimensions disagree");
  const auto& d = *sys.sym;
  const auto k = static_cast<Eigen::Index>(d.rank);
  const Vector proj = d.U.leftCols(k).transpose() * sys.b;
  const double bAb = proj.cwiseAbs2().cwiseQuotient(d.sigma.head(k)).sum();
  return c.dot(sys.A * c) - 2.0 * c.dot(sys.b) + bAb;
}

double regularizer_norm(const SpectralSystem& sys, RegularizerKind kind, const Vector& c) {
  switch (kind) {
    case RegularizerKind::ProjectedL2small:
      return c.squaredNorm();
    case RegularizerKind::ProjectedL2rho:
      return c.dot(sys.B * c);
    case RegularizerKind::SidaRkhs: {
      const auto k = static_cast<Eigen::Index>(sys.gen.rank);
      const Vector alpha = sys.gen.BV.leftCols(k).transpose() * c;
      return alpha.cwiseAbs2().cwiseQuotient(sys.gen.lambda.head(k)).sum();
    }
  }
  return 0.0;
}

}  // namespace dartr
