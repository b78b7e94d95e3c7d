#include "dartr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dartr/error.hpp"

namespace dartr {

std::size_t commensurate_cells(double span, double dx) {
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    fail(ErrorCode::NonCommensurateGrid, "mesh size must be positive, got " + std::to_string(dx));
  }
  if (!(span > 0.0)) {
    fail(ErrorCode::NonCommensurateGrid, "grid span must be positive");
  }
  const double cells = span / dx;
  const double rounded = std::round(cells);
  if (rounded < 1.0 || std::abs(cells - rounded) > kCommensurabilityTol * std::max(1.0, rounded)) {
    fail(ErrorCode::NonCommensurateGrid,
         "dx = " + std::to_string(dx) + " does not divide span " + std::to_string(span));
  }
  return static_cast<std::size_t>(rounded);
}

UniformGrid make_uniform_grid(double x_min, double x_max, double dx) {
  if (!(x_max > x_min)) {
    fail(ErrorCode::NonCommensurateGrid, "x_max must exceed x_min");
  }
  const std::size_t cells = commensurate_cells(x_max - x_min, dx);
  UniformGrid grid;
  grid.x_min_ = x_min;
  grid.dx_ = dx;
  grid.points_.resize(static_cast<Eigen::Index>(cells + 1));
  for (std::size_t j = 0; j <= cells; ++j) {
    grid.points_[static_cast<Eigen::Index>(j)] = x_min + static_cast<double>(j) * dx;
  }
  grid.x_max_ = grid.points_[static_cast<Eigen::Index>(cells)];
  return grid;
}

std::size_t UniformGrid::nearest_index(double x) const {
  const double t = std::round((x - x_min_) / dx_);
  if (t <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(t), size() - 1);
}

DiscreteMeasure DiscreteMeasure::normalized(UniformGrid r_grid, Vector raw_weights) {
  if (static_cast<std::size_t>(raw_weights.size()) != r_grid.size()) {
    fail(ErrorCode::DimensionMismatch, "measure weights do not match the r-grid");
  }
  if ((raw_weights.array() < 0.0).any()) {
    fail(ErrorCode::InvalidArgument, "measure weights must be nonnegative");
  }
  const double mass = raw_weights.sum() * r_grid.dx();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    fail(ErrorCode::EmptyExploration, "all exploration weights vanish");
  }
  DiscreteMeasure m;
  m.grid_ = std::move(r_grid);
  m.weights_ = raw_weights / mass;
  m.total_ = m.weights_.sum() * m.grid_.dx();
  return m;
}

double DiscreteMeasure::max_positive_point() const {
  for (Eigen::Index k = weights_.size() - 1; k >= 0; --k) {
    if (weights_[k] > 0.0) return grid_.points()[k];
  }
  return 0.0;
}

DiscreteMeasure DiscreteMeasure::truncated(std::size_t count) const {
  if (count == 0 || count > size()) {
    fail(ErrorCode::DimensionMismatch, "truncation length out of range");
  }
  if (count == 1) {
    fail(ErrorCode::DimensionMismatch, "truncated measure needs at least two nodes");
  }
  const double dx = grid_.dx();
  UniformGrid g = make_uniform_grid(grid_.x_min(), grid_.x_min() + static_cast<double>(count - 1) * dx, dx);
  return normalized(std::move(g), weights_.head(static_cast<Eigen::Index>(count)));
}

double l2rho_inner(const Vector& f, const Vector& g, const DiscreteMeasure& m) {
  if (f.size() != g.size() || static_cast<std::size_t>(f.size()) != m.size()) {
    fail(ErrorCode::DimensionMismatch, "l2rho_inner: vectors and measure differ in length");
  }
  return (f.array() * g.array() * m.weights().array()).sum() * m.dx();
}

double l2rho_error(const Vector& estimate, const Vector& truth, const DiscreteMeasure& m) {
  if (estimate.size() != truth.size()) {
    fail(ErrorCode::DimensionMismatch, "l2rho_error: estimate and truth differ in length");
  }
  const Vector e = estimate - truth;
  return std::sqrt(std::max(0.0, l2rho_inner(e, e, m)));
}

}  // namespace dartr
