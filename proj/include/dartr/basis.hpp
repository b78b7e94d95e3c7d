#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "dartr/grid.hpp"

namespace dartr {

enum class BasisKind { PiecewiseConstant, BSpline };

std::string_view to_string(BasisKind kind);
BasisKind parse_basis(std::string_view name);

/// H_n = span{phi_1..phi_n} on [0, R].
///
/// PiecewiseConstant splits (0, R] into n right-closed cells of width R/n, so
/// with n = R/dx cell i holds exactly the r-grid node (i+1)*dx. BSpline uses a
/// clamped uniform knot vector with n - degree + 1 distinct knots.
class HypothesisSpace {
 public:
  BasisKind kind() const noexcept { return kind_; }
  int degree() const noexcept { return degree_; }
  std::size_t dimension() const noexcept { return n_; }
  double support_bound() const noexcept { return R_; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  double eval(std::size_t i, double r) const;
  /// Row k holds (phi_1(r_k), ..., phi_n(r_k)).
  Matrix evaluate(const Vector& r) const;
  /// sum_i c_i phi_i(r) at each point of r.
  Vector combine(const Vector& c, const Vector& r) const;

 private:
  friend HypothesisSpace build_hypothesis_space(BasisKind, std::size_t, double, double, int);

  double bspline(std::size_t i, int p, double r) const;

  BasisKind kind_ = BasisKind::PiecewiseConstant;
  int degree_ = 0;
  std::size_t n_ = 0;
  double R_ = 0.0;
  std::vector<double> knots_;
};

/// Admissible dimensions are ceil(0.2 * M) .. M with M = floor(R / dx).
/// Throws DimensionOutOfRange otherwise.
HypothesisSpace build_hypothesis_space(BasisKind kind, std::size_t n, double R, double dx,
                                       int degree = 0);

/// floor(R/dx) with the same commensurability slack used by the grids.
std::size_t max_dimension(double R, double dx);

}  // namespace dartr
