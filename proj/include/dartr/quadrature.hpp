#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace dartr {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  std::size_t max_subdivisions = 4000;
};

/// Globally adaptive 15-point Gauss-Kronrod quadrature on [a, b]. The interval
/// is first split at every breakpoint in (a, b); panels are then bisected in
/// order of decreasing error estimate until the summed estimate is below
/// abs_tol. Throws QuadratureNoConvergence when the subdivision budget runs out.
QuadratureResult integrate_gk15(const std::function<double(double)>& f, double a, double b,
                                std::span<const double> breakpoints = {},
                                const QuadratureOptions& options = {});

}  // namespace dartr
