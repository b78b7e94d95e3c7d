#include "dartr/operators.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "dartr/error.hpp"
#include "dartr/quadrature.hpp"

namespace dartr {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(OperatorKind op) {
  switch (op) {
    case OperatorKind::LinearIntegral: return "LinearIntegral";
    case OperatorKind::NonlinearMeanField: return "NonlinearMeanField";
    case OperatorKind::Nonlocal: return "Nonlocal";
  }
  return "Unknown";
}

OperatorKind parse_operator(std::string_view name) {
  const std::string s = lower(name);
  if (s == "linear" || s == "linearintegral") return OperatorKind::LinearIntegral;
  if (s == "nonlinear" || s == "nonlinearmeanfield" || s == "meanfield") {
    return OperatorKind::NonlinearMeanField;
  }
  if (s == "nonlocal") return OperatorKind::Nonlocal;
  fail(ErrorCode::ConfigError, "unknown operator '" + std::string(name) + "'");
}

KernelSpec KernelSpec::truncated_sine() {
  KernelSpec k;
  k.tag = KernelTag::TruncatedSine;
  k.name = "TruncatedSine";
  k.phi = [](double r) { return (r >= 0.0 && r <= 3.0) ? std::sin(2.0 * r) : 0.0; };
  k.support_max = 3.0;
  return k;
}

KernelSpec KernelSpec::gaussian() {
  constexpr double mean = 3.0;
  constexpr double sd = 0.75;
  KernelSpec k;
  k.tag = KernelTag::Gaussian;
  k.name = "Gaussian";
  k.phi = [](double r) {
    const double z = (r - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  };
  k.support_max = mean + 8.0 * sd;
  return k;
}

KernelSpec KernelSpec::zero() {
  return custom("Zero", [](double) { return 0.0; }, 1.0);
}

KernelSpec KernelSpec::custom(std::string name, std::function<double(double)> phi,
                              double support_max, std::vector<double> breakpoints) {
  if (!(support_max > 0.0)) fail(ErrorCode::InvalidArgument, "kernel support must be positive");
  KernelSpec k;
  k.tag = KernelTag::Custom;
  k.name = std::move(name);
  k.phi = std::move(phi);
  k.support_max = support_max;
  k.breakpoints = std::move(breakpoints);
  return k;
}

KernelSpec kernel_by_name(std::string_view name) {
  const std::string s = lower(name);
  if (s == "sine" || s == "truncatedsine" || s == "truncated_sine") return KernelSpec::truncated_sine();
  if (s == "gaussian") return KernelSpec::gaussian();
  if (s == "zero") return KernelSpec::zero();
  fail(ErrorCode::ConfigError, "unknown kernel '" + std::string(name) + "'");
}

double FunctionDatum::derivative_at(double x) const {
  if (!has_derivative()) {
    fail(ErrorCode::MissingDerivative, "function '" + name + "' has no declared derivative");
  }
  return in_support(x) ? derivative(x) : 0.0;
}

FunctionData standard_u_set(OperatorKind op) {
  constexpr double pi = std::numbers::pi;
  FunctionData us;
  us.push_back({"u1", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, -pi, pi});
  us.push_back({"u2", [](double x) { return std::sin(2.0 * x); },
                [](double x) { return 2.0 * std::cos(2.0 * x); }, -pi, pi});
  if (op == OperatorKind::NonlinearMeanField) {
    us.push_back({"u3", [](double x) { return x; }, [](double) { return 1.0; }, -pi, pi});
  }
  return us;
}

double eval_g(OperatorKind op, const FunctionDatum& u, double x, double y) {
  switch (op) {
    case OperatorKind::LinearIntegral:
      return u(x + y);
    case OperatorKind::Nonlocal:
      return u(x + y) - u(x);
    case OperatorKind::NonlinearMeanField:
      // Product rule: d/dx[u(x+y) u(x)] = u'(x+y) u(x) + u(x+y) u'(x).
      return u.derivative_at(x + y) * u(x) + u(x + y) * u.derivative_at(x);
  }
  return 0.0;
}

double forward_map(OperatorKind op, const KernelSpec& kernel, const FunctionDatum& u, double x,
                   double R0, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "quadrature tolerance must be positive");
  if (op == OperatorKind::NonlinearMeanField && !u.has_derivative()) {
    fail(ErrorCode::MissingDerivative, "mean-field operator needs u'");
  }
  const double upper = std::min(R0, kernel.support_max);
  if (!(upper > 0.0)) return 0.0;
  // Every g vanishes unless x or one of x +- r lies in supp(u).
  if (x < u.support_min - upper || x > u.support_max + upper) return 0.0;

  std::vector<double> breaks = kernel.breakpoints;
  for (double p : u.breakpoints()) {
    breaks.push_back(p - x);
    breaks.push_back(x - p);
  }
  auto integrand = [&](double r) {
    const double phi = kernel(r);
    if (phi == 0.0) return 0.0;
    return phi * (eval_g(op, u, x, r) + eval_g(op, u, x, -r));
  };
  QuadratureOptions options;
  options.abs_tol = tol;
  return integrate_gk15(integrand, 0.0, upper, breaks, options).value;
}

Dataset generate_clean_dataset(OperatorKind op, const KernelSpec& kernel, const FunctionData& u_list,
                               const UniformGrid& x_grid, const GenerationOptions& options) {
  if (u_list.empty()) fail(ErrorCode::InvalidArgument, "no input functions given");
  const double radius = options.radius > 0.0 ? options.radius : kernel.support_max;
  if (radius < kernel.support_max) {
    fail(ErrorCode::InvalidArgument, "integration radius is smaller than the kernel support");
  }
  const auto J = static_cast<Eigen::Index>(x_grid.size());
  const auto N = static_cast<Eigen::Index>(u_list.size());
  Dataset ds;
  ds.op = op;
  ds.kernel_name = kernel.name;
  ds.x_grid = x_grid;
  ds.u.resize(J, N);
  ds.f_clean.resize(J, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const FunctionDatum& u = u_list[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < J; ++j) {
      const double x = x_grid.points()[j];
      ds.u(j, k) = u(x);
      ds.f_clean(j, k) = forward_map(op, kernel, u, x, radius, options.tol);
    }
  }
  ds.f = ds.f_clean;
  return ds;
}

double noise_sigma(const Matrix& f_clean, double dx, double nsr, NoiseNorm norm) {
  if (nsr < 0.0) fail(ErrorCode::InvalidArgument, "nsr must be nonnegative");
  if (f_clean.cols() == 0) return 0.0;
  double mean_norm = 0.0;
  for (Eigen::Index k = 0; k < f_clean.cols(); ++k) {
    const double weight = norm == NoiseNorm::L2 ? dx : 1.0 / static_cast<double>(f_clean.rows());
    mean_norm += std::sqrt(f_clean.col(k).squaredNorm() * weight);
  }
  mean_norm /= static_cast<double>(f_clean.cols());
  return nsr * mean_norm;
}

Dataset add_noise(const Dataset& clean, double nsr, std::uint64_t seed, NoiseNorm norm) {
  Dataset ds = clean;
  ds.nsr = nsr;
  ds.seed = seed;
  ds.sigma = noise_sigma(clean.f_clean, clean.x_grid.dx(), nsr, norm);
  ds.f = clean.f_clean;
  if (nsr == 0.0) return ds;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < ds.f.cols(); ++k) {
    for (Eigen::Index j = 0; j < ds.f.rows(); ++j) {
      ds.f(j, k) += ds.sigma * normal(rng);
    }
  }
  return ds;
}

Dataset generate_dataset(OperatorKind op, const KernelSpec& kernel, const FunctionData& u_list,
                         const UniformGrid& x_grid, double nsr, std::uint64_t seed,
                         const GenerationOptions& options, NoiseNorm norm) {
  if (nsr < 0.0) fail(ErrorCode::InvalidArgument, "nsr must be nonnegative");
  return add_noise(generate_clean_dataset(op, kernel, u_list, x_grid, options), nsr, seed, norm);
}

}  // namespace dartr
