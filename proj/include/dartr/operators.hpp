#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dartr/grid.hpp"

namespace dartr {

/// The three operator families R_phi[u](x) = int phi(|y|) g[u](x, y) dy:
///   LinearIntegral      g[u](x,y) = u(x+y)
///   NonlinearMeanField  g[u](x,y) = d/dx [u(x+y) u(x)]
///   Nonlocal            g[u](x,y) = u(x+y) - u(x)
enum class OperatorKind { LinearIntegral, NonlinearMeanField, Nonlocal };

std::string_view to_string(OperatorKind op);
/// Accepts the enum names as well as the short forms linear, nonlinear, nonlocal.
OperatorKind parse_operator(std::string_view name);

enum class KernelTag { TruncatedSine, Gaussian, Custom };

/// A radial kernel with a closed-form evaluator. Integration of the forward
/// map is restricted to [0, support_max]; `breakpoints` lists interior points
/// where phi is discontinuous.
struct KernelSpec {
  KernelTag tag = KernelTag::Custom;
  std::string name;
  std::function<double(double)> phi;
  double support_max = 0.0;
  std::vector<double> breakpoints;

  double operator()(double r) const { return phi(r); }

  /// sin(2r) on [0, 3], zero elsewhere.
  static KernelSpec truncated_sine();
  /// Normal density with mean 3 and standard deviation 0.75, integrated over
  /// [0, 9] where the density has decayed below 1e-13 of its peak.
  static KernelSpec gaussian();
  static KernelSpec zero();
  static KernelSpec custom(std::string name, std::function<double(double)> phi, double support_max,
                           std::vector<double> breakpoints = {});
};

/// Accepts sine / truncated_sine, gaussian, zero.
KernelSpec kernel_by_name(std::string_view name);

/// A compactly supported input function u with an optional derivative.
/// Both evaluators are only consulted on [support_min, support_max].
struct FunctionDatum {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double support_min = 0.0;
  double support_max = 0.0;

  bool in_support(double x) const { return x >= support_min && x <= support_max; }
  double operator()(double x) const { return in_support(x) ? value(x) : 0.0; }
  bool has_derivative() const { return static_cast<bool>(derivative); }
  /// Throws MissingDerivative if no derivative was declared.
  double derivative_at(double x) const;
  std::vector<double> breakpoints() const { return {support_min, support_max}; }
};

using FunctionData = std::vector<FunctionDatum>;

/// u_1 = sin(x), u_2 = sin(2x) on [-pi, pi]; the mean-field operator also gets
/// u_3 = x with declared derivative 1 on [-pi, pi].
FunctionData standard_u_set(OperatorKind op);

double eval_g(OperatorKind op, const FunctionDatum& u, double x, double y);

/// int_0^R0 phi(r) [g[u](x, r) + g[u](x, -r)] dr by adaptive Gauss-Kronrod with
/// panel breaks at the discontinuities of phi and u.
double forward_map(OperatorKind op, const KernelSpec& kernel, const FunctionDatum& u, double x,
                   double R0, double tol = 1e-10);

/// Discrete samples of N input/output pairs on a common x-grid. Column k of
/// each matrix holds pair k.
struct Dataset {
  OperatorKind op = OperatorKind::LinearIntegral;
  std::string kernel_name;
  UniformGrid x_grid;
  Matrix u;
  Matrix f;
  Matrix f_clean;
  double nsr = 0.0;
  std::uint64_t seed = 0;
  double sigma = 0.0;

  std::size_t num_pairs() const { return static_cast<std::size_t>(u.cols()); }
};

struct GenerationOptions {
  /// Upper integration radius; defaults to the kernel's support bound.
  double radius = 0.0;
  double tol = 1e-10;
};

/// Noise-free samples; nsr and seed are left at zero.
Dataset generate_clean_dataset(OperatorKind op, const KernelSpec& kernel, const FunctionData& u_list,
                               const UniformGrid& x_grid, const GenerationOptions& options = {});

/// Signal norm that nsr is relative to.
///   Rms: sqrt(mean_j f(x_j)^2), the L2 norm for the uniform probability on the x-domain.
///   L2:  sqrt(sum_j f(x_j)^2 dx), the L2 norm for Lebesgue measure.
enum class NoiseNorm { Rms, L2 };

/// sigma = nsr * mean_k ||f_clean(., k)|| in the chosen norm.
double noise_sigma(const Matrix& f_clean, double dx, double nsr, NoiseNorm norm = NoiseNorm::Rms);

/// Returns a copy of `clean` with i.i.d. N(0, sigma^2) noise added in
/// column-major (k, j) order from a stream seeded by `seed`.
Dataset add_noise(const Dataset& clean, double nsr, std::uint64_t seed, NoiseNorm norm = NoiseNorm::Rms);

Dataset generate_dataset(OperatorKind op, const KernelSpec& kernel, const FunctionData& u_list,
                         const UniformGrid& x_grid, double nsr, std::uint64_t seed,
                         const GenerationOptions& options = {}, NoiseNorm norm = NoiseNorm::Rms);

}  // namespace dartr
