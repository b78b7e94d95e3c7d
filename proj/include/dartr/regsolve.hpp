#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "dartr/basis.hpp"
#include "dartr/grid.hpp"

namespace dartr {

/// Relative threshold below which an eigenvalue counts as zero.
inline constexpr double kDefaultRankTol = 1e-12;

/// Solution of A V = B V diag(lambda) with V^T B V = I, eigenvalues sorted
/// nonincreasing. Each column has its largest-magnitude entry positive.
struct GenEigDecomposition {
  Matrix V;
  /// B V, i.e. V^{-T}; lets B-geometry quantities be formed without B.
  Matrix BV;
  Vector lambda;
  std::size_t rank = 0;
  double rank_tol = kDefaultRankTol;

  std::size_t size() const { return static_cast<std::size_t>(lambda.size()); }
  /// Absolute cutoff rank_tol * lambda_1.
  double cutoff() const;
};

/// Plain symmetric eigendecomposition A = U diag(sigma) U^T, same ordering and
/// sign conventions as GenEigDecomposition.
struct SymEigDecomposition {
  Matrix U;
  Vector sigma;
  std::size_t rank = 0;
  double rank_tol = kDefaultRankTol;
};

/// Reduction through the Cholesky factor of B; B^{-1}A is never formed.
/// Throws NotPositiveDefinite for a B that fails to factor, NoConvergence if
/// the tridiagonal QR iteration does not converge.
GenEigDecomposition gen_eig(const Matrix& A, const Matrix& B, double rank_tol = kDefaultRankTol);

SymEigDecomposition sym_eig(const Matrix& A, double rank_tol = kDefaultRankTol);

/// B_rkhs = (V Lambda V^T)^+ through the retained spectrum: B V_r Lambda_r^{-1} V_r^T B.
/// Throws AllZeroSpectrum when no eigenvalue is retained.
Matrix rkhs_norm_matrix(const GenEigDecomposition& dec);

/// (V Lambda V^T)^{1/2} restricted to the retained modes; the inverse square
/// root of B_rkhs.
Matrix rkhs_inverse_sqrt(const GenEigDecomposition& dec);

enum class RegularizerKind { ProjectedL2small, ProjectedL2rho, SidaRkhs };

std::string_view to_string(RegularizerKind kind);
/// Short names used in files and on the command line: l2, L2, rkhs.
std::string_view short_name(RegularizerKind kind);
RegularizerKind parse_regularizer(std::string_view name);

/// Spectral data one regularizer needs. The l2 kind reads `sym`; the L2 and
/// RKHS kinds read `gen` (and B for norms).
struct SpectralSystem {
  Matrix A;
  Vector b;
  Matrix B;
  GenEigDecomposition gen;
  std::optional<SymEigDecomposition> sym;
  /// Constant term of the loss (the data energy) when known.
  std::optional<double> data_energy;

  static SpectralSystem from(const Matrix& A, const Vector& b, const Matrix& B,
                             double rank_tol = kDefaultRankTol, bool with_sym = true);
};

/// Spectral Tikhonov solutions:
///   l2:   sum_{sigma_i > cut} u_i u_i^T b / (sigma_i + lambda)
///   L2:   sum_{lambda_i > cut} v_i (v_i^T b) / (lambda_i + lambda)
///   RKHS: sum_{lambda_i > cut} v_i (v_i^T b) / (lambda_i + lambda / lambda_i)
Vector solve_regularized(const SpectralSystem& sys, RegularizerKind kind, double lambda);

/// Minimum-norm least-squares solve of (S A S + lambda I) c~ = S b, c = S c~,
/// with S = rkhs_inverse_sqrt(dec).
Vector solve_regularized_minnorm(const Matrix& A, const Vector& b, const Matrix& S, double lambda);

/// c^T A c - 2 c^T b + b^T A^+ b with the spectral pseudo-inverse of A.
double loss_value(const Matrix& A, const Vector& b, const Vector& c, double rank_tol = kDefaultRankTol);

/// Same loss using the symmetric decomposition stored in `sys` when present.
double loss_value(const SpectralSystem& sys, const Vector& c);

/// Regularization norm matching `kind`: c^T c, c^T B c or c^T B_rkhs c.
double regularizer_norm(const SpectralSystem& sys, RegularizerKind kind, const Vector& c);

struct EstimatorResult {
  Vector c;
  double lambda = 0.0;
  double loss = 0.0;
  double reg_norm = 0.0;
  /// Mesh of the data the space was built on.
  double dx = 0.0;
  RegularizerKind regularizer = RegularizerKind::SidaRkhs;
  HypothesisSpace space;
};

}  // namespace dartr
