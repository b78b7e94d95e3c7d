#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace dartr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance used to decide whether a mesh size divides a span.
inline constexpr double kCommensurabilityTol = 1e-9;

/// Uniform grid x_j = x_min + j*dx, j = 0..J, with x_max = x_min + J*dx.
class UniformGrid {
 public:
  UniformGrid() = default;

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.size()); }
  const Vector& points() const noexcept { return points_; }
  double operator[](std::size_t j) const { return points_[static_cast<Eigen::Index>(j)]; }

  /// Index of the grid point nearest to x (clamped to the grid).
  std::size_t nearest_index(double x) const;

 private:
  friend UniformGrid make_uniform_grid(double x_min, double x_max, double dx);

  double x_min_ = 0.0;
  double x_max_ = 0.0;
  double dx_ = 1.0;
  Vector points_;
};

/// Throws NonCommensurateGrid when dx does not divide (x_max - x_min).
UniformGrid make_uniform_grid(double x_min, double x_max, double dx);

/// Number of mesh cells ((x_max - x_min)/dx) if commensurate within tolerance.
std::size_t commensurate_cells(double span, double dx);

/// A density on an r-grid over (0, R]. Mass of node k is weights[k] * dx.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Normalizes raw nonnegative weights so that sum(weights) * dx == 1.
  /// Throws EmptyExploration if every weight vanishes.
  static DiscreteMeasure normalized(UniformGrid r_grid, Vector raw_weights);

  const UniformGrid& grid() const noexcept { return grid_; }
  const Vector& weights() const noexcept { return weights_; }
  double dx() const noexcept { return grid_.dx(); }
  std::size_t size() const noexcept { return grid_.size(); }
  /// sum(weights) * dx; 1 after normalization.
  double total() const noexcept { return total_; }
  /// Support bound R (largest grid point).
  double support_bound() const noexcept { return grid_.x_max(); }
  /// Largest grid point carrying positive weight.
  double max_positive_point() const;

  /// Restriction to the first `count` nodes, renormalized.
  DiscreteMeasure truncated(std::size_t count) const;

 private:
  UniformGrid grid_;
  Vector weights_;
  double total_ = 0.0;
};

/// sum_k f_k g_k rho_k dx.
double l2rho_inner(const Vector& f, const Vector& g, const DiscreteMeasure& m);

/// sqrt(l2rho_inner(e, e, m)) with e = estimate - truth.
double l2rho_error(const Vector& estimate, const Vector& truth, const DiscreteMeasure& m);

}  // namespace dartr
