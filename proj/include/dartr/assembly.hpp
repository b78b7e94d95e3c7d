#pragma once

#include <cstddef>
#include <limits>
#include <string>

#include "dartr/basis.hpp"
#include "dartr/grid.hpp"
#include "dartr/operators.hpp"

namespace dartr {

/// Compressed sufficient statistics of a dataset on the r-grid r_k = k*dx,
/// k = 1..n_r: the integral kernel G(r_k, r_l), the vector g_N^f(r_k) and the
/// exploration measure restricted to (0, R].
struct RegressionData {
  UniformGrid r_grid;
  Matrix G;
  Vector gNf;
  DiscreteMeasure rho;
  /// Data energy C_N^f = (1/N) sum_k sum_j f_k(x_j)^2 dx, the constant term of
  /// the loss; NaN when unknown.
  double data_energy = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return r_grid.size(); }
  double dx() const { return r_grid.dx(); }
};

/// Normal matrix A, right-hand side b and basis Gram matrix B in L2(rho).
struct RegressionTriplet {
  Matrix A;
  Vector b;
  Matrix B;
  HypothesisSpace space;
  DiscreteMeasure rho;
  double data_energy = std::numeric_limits<double>::quiet_NaN();
};

/// Index interval [first, last] of a sampled function's estimated support.
struct SampleSupport {
  bool empty = true;
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Robust noise scale: 1.4826 * MAD(first differences) / sqrt(2).
double robust_noise_scale(const Vector& v);

/// Smallest index interval containing every sample with
/// |v| > max(3 * robust_noise_scale(v), 1e-12 * max|v|).
SampleSupport estimate_sample_support(const Vector& v);

/// Centered second-order differences inside the support hull of u, second-order
/// one-sided differences at its two edges, zero outside.
Vector finite_difference_derivative(const Vector& u, double dx);

/// Density on {r_j = j*dx <= R0} proportional to
/// sum_k sum_i |g[u_k](x_i, r_j)| + |g[u_k](x_i, -r_j)|.
DiscreteMeasure exploration_measure(const Dataset& ds, double R0);

/// Kernel support bound R = 1.1 * min(R_rho, D), snapped up to a multiple of
/// dx, where D is the largest gap between the support edges of u_k and f_k.
/// When D is below one mesh cell the outputs carry no range information and
/// R_rho alone is used. Throws DegenerateSupport if some f_k has empty support.
double estimate_support(const Dataset& ds, const DiscreteMeasure& rho);

/// One pass over the samples. Trailing r-nodes whose exploration weight is
/// below 1e-12 of the largest are dropped, so the grid may end before R.
RegressionData assemble_regression_data(const Dataset& ds, double R);

/// Riemann-sum triplet. Throws SingularBasis if min eig(B) <= 1e-12 * ||B||.
RegressionTriplet assemble_triplet(const RegressionData& rd, const HypothesisSpace& hs);

/// Full-resolution piecewise-constant space matching the data's r-grid.
HypothesisSpace full_resolution_space(const RegressionData& rd);

}  // namespace dartr
