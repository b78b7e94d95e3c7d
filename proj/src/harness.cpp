#include "dartr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "dartr/error.hpp"

namespace dartr {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_kernel(const std::string& name) { return kernel_by_name(name).name; }

// Rethrows `e` tagged with a stage name.
template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

std::string describe(const Error& e) {
  return (e.stage().empty() ? std::string("unknown") : e.stage()) + ": " + e.what();
}

CellResult blank_cell(const Dataset& ds, RegularizerKind kind) {
  CellResult c;
  c.op = ds.op;
  c.kernel = ds.kernel_name;
  c.nsr = ds.nsr;
  c.dx = ds.x_grid.dx();
  c.regularizer = kind;
  c.lambda = c.loss = c.l2rho_error = std::nan("");
  return c;
}

Dataset make_clean(const StudyConfig& cfg, OperatorKind op, const std::string& kernel, double dx) {
  const KernelSpec spec = kernel_by_name(kernel);
  GenerationOptions opts;
  opts.tol = cfg.quad_tol;
  return generate_clean_dataset(op, spec, standard_u_set(op), make_uniform_grid(cfg.x_min, cfg.x_max, dx), opts);
}

Vector sample_truth(const KernelSpec& truth, const Vector& r, double dx, TruthSampling sampling) {
  Vector t(r.size());
  const double shift = sampling == TruthSampling::Midpoint ? 0.5 * dx : 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) t[i] = truth(r[i] - shift);
  return t;
}

template <class Task>
void run_parallel(std::size_t count, std::size_t workers, Task&& task) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

EstimatorResult fit_estimator(const SpectralSystem& sys, const HypothesisSpace& space, double dx,
                              RegularizerKind kind, const FitOptions& options, LCurve* curve_out) {
  double lambda = 0.0;
  try {
    LCurve curve = build_lcurve(sys, kind, options.n_lambda, options.lambda_floor, options.lcurve_loss);
    lambda = select_lambda(curve).lambda;
    if (curve_out) *curve_out = std::move(curve);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateCurve) throw;
    lambda = lambda_range(sys, kind, options.lambda_floor).first;
  }
  EstimatorResult res;
  res.regularizer = kind;
  res.space = space;
  res.dx = dx;
  res.lambda = lambda;
  res.c = solve_regularized(sys, kind, lambda);
  res.loss = loss_value(sys, res.c);
  res.reg_norm = regularizer_norm(sys, kind, res.c);
  return res;
}

EstimatorResult fit_estimator(const RegressionTriplet& triplet, RegularizerKind kind, const FitOptions& options,
                              LCurve* curve_out) {
  SpectralSystem sys = SpectralSystem::from(triplet.A, triplet.b, triplet.B, options.rank_tol);
  if (std::isfinite(triplet.data_energy)) sys.data_energy = triplet.data_energy;
  return fit_estimator(sys, triplet.space, triplet.rho.dx(), kind, options, curve_out);
}

std::size_t select_dimension(const std::vector<EstimatorResult>& candidates) {
  if (candidates.empty()) fail(ErrorCode::NoCandidates, "no candidate estimators");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& b = candidates[best];
    if (c.loss < b.loss || (c.loss == b.loss && c.space.dimension() < b.space.dimension())) best = i;
  }
  return best;
}

double fit_rate(const std::vector<std::pair<double, double>>& dx_error) {
  std::set<double> distinct;
  for (const auto& [dx, err] : dx_error) {
    if (!(dx > 0.0) || !(err > 0.0) || !std::isfinite(err)) {
      fail(ErrorCode::DegenerateFit, "rate fit needs positive finite dx and error values");
    }
    distinct.insert(dx);
  }
  if (distinct.size() < 2) fail(ErrorCode::DegenerateFit, "rate fit needs at least two distinct dx values");
  const double n = static_cast<double>(dx_error.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [dx, err] : dx_error) {
    mx += std::log(dx);
    my += std::log(err);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [dx, err] : dx_error) {
    const double a = std::log(dx) - mx;
    sxy += a * (std::log(err) - my);
    sxx += a * a;
  }
  return sxy / sxx;
}

std::uint64_t dataset_seed(std::uint64_t master_seed, const DataKey& key) {
  std::uint64_t h = splitmix64(master_seed);
  h = mix(h, static_cast<std::uint64_t>(key.op));
  h = mix(h, hash_string(canonical_kernel(key.kernel)));
  h = mix(h, std::bit_cast<std::uint64_t>(key.nsr));
  h = mix(h, key.dx_index);
  h = mix(h, key.seed_index);
  return h;
}

std::vector<std::size_t> candidate_dimensions(const StudyConfig& cfg, double R, double dx) {
  const std::size_t M = max_dimension(R, dx);
  if (cfg.dimension_policy == DimensionPolicy::Full || cfg.n_candidates <= 1) return {M};
  const auto lo = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(M) - 1e-9));
  std::vector<std::size_t> out;
  const std::size_t k = cfg.n_candidates;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(k - 1);
    const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(lo) + t * static_cast<double>(M - lo)));
    if (n > static_cast<std::size_t>(cfg.degree) && (out.empty() || out.back() != n)) out.push_back(n);
  }
  return out;
}

double support_for(const Dataset& ds, const DiscreteMeasure& rho) {
  try {
    return estimate_support(ds, rho);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSupport) throw;
  }
  const double dx = rho.dx();
  return std::max(2.0, std::ceil(1.1 * rho.max_positive_point() / dx - kCommensurabilityTol)) * dx;
}

FitOptions fit_options(const StudyConfig& cfg) {
  FitOptions f;
  f.n_lambda = cfg.n_lambda;
  f.lambda_floor = cfg.lambda_floor;
  f.lcurve_loss = cfg.lcurve_loss;
  f.rank_tol = cfg.rank_tol;
  return f;
}

PreparedData prepare_data(const StudyConfig& cfg, const Dataset& ds) {
  const double dx = ds.x_grid.dx();
  PreparedData p;
  const DiscreteMeasure rho = staged("exploration", [&] { return exploration_measure(ds, cfg.explore_radius); });
  const double R = staged("support", [&] { return support_for(ds, rho); });
  p.data = staged("assembly", [&] { return assemble_regression_data(ds, R); });
  const double Rd = p.data.r_grid.x_max();
  for (std::size_t n : staged("dimension", [&] { return candidate_dimensions(cfg, Rd, dx); })) {
    const auto hs = staged("basis", [&] { return build_hypothesis_space(cfg.basis, n, Rd, dx, cfg.degree); });
    const auto tri = staged("triplet", [&] { return assemble_triplet(p.data, hs); });
    p.spaces.push_back(hs);
    p.systems.push_back(
        staged("decomposition", [&] { return SpectralSystem::from(tri.A, tri.b, tri.B, cfg.rank_tol); }));
    p.systems.back().data_energy = p.data.data_energy;
  }
  return p;
}

EstimatorResult fit_prepared(const StudyConfig& cfg, const PreparedData& p, RegularizerKind kind, LCurve* curve_out) {
  const FitOptions fopts = fit_options(cfg);
  std::vector<EstimatorResult> candidates;
  std::vector<LCurve> curves(p.systems.size());
  for (std::size_t i = 0; i < p.systems.size(); ++i) {
    candidates.push_back(staged("lcurve", [&] {
      return fit_estimator(p.systems[i], p.spaces[i], p.data.dx(), kind, fopts, curve_out ? &curves[i] : nullptr);
    }));
  }
  const std::size_t best = staged("selection", [&] { return select_dimension(candidates); });
  if (curve_out) *curve_out = std::move(curves[best]);
  return candidates[best];
}

std::vector<CellResult> run_on_dataset(const StudyConfig& cfg, const Dataset& ds, const KernelSpec& truth,
                                       const std::vector<RegularizerKind>& regularizers, bool keep_profile) {
  const auto start = Clock::now();
  std::vector<CellResult> out;
  out.reserve(regularizers.size());
  for (auto kind : regularizers) out.push_back(blank_cell(ds, kind));
  const double dx = ds.x_grid.dx();

  PreparedData prepared;
  try {
    prepared = prepare_data(cfg, ds);
  } catch (const Error& e) {
    for (auto& c : out) c.error = describe(e);
    return out;
  }
  const double shared = seconds_since(start);
  const RegressionData& rd = prepared.data;

  for (std::size_t r = 0; r < regularizers.size(); ++r) {
    const auto own_start = Clock::now();
    CellResult& cell = out[r];
    try {
      const EstimatorResult est = fit_prepared(cfg, prepared, regularizers[r], nullptr);
      const Vector& rgrid = rd.r_grid.points();
      const Vector estimate = est.space.combine(est.c, rgrid);
      const Vector phi = sample_truth(truth, rgrid, dx, cfg.truth_sampling);
      cell.n = est.space.dimension();
      cell.lambda = est.lambda;
      cell.loss = est.loss;
      cell.l2rho_error = staged("error", [&] { return l2rho_error(estimate, phi, rd.rho); });
      if (keep_profile) cell.profile = Profile{rgrid, estimate, phi, rd.rho.weights()};
    } catch (const Error& e) {
      cell.error = describe(e);
    }
    cell.wall_time_s = cfg.record_timing ? shared + seconds_since(own_start) : 0.0;
  }
  return out;
}

std::vector<CellResult> run_data_cell(const StudyConfig& cfg, const DataKey& key) {
  const double dx = cfg.dx_list.at(key.dx_index);
  const KernelSpec truth = kernel_by_name(key.kernel);
  const Dataset clean = make_clean(cfg, key.op, key.kernel, dx);
  Dataset ds = add_noise(clean, key.nsr, dataset_seed(cfg.master_seed, key), cfg.noise_norm);
  auto cells = run_on_dataset(cfg, ds, truth, cfg.regularizers, false);
  for (auto& c : cells) c.seed = key.seed_index;
  return cells;
}

CellResult run_cell(const StudyConfig& cfg, const CellKey& key) {
  StudyConfig one = cfg;
  one.regularizers = {key.regularizer};
  return run_data_cell(one, key.data).front();
}

std::vector<RateSummary> aggregate_rates(const std::vector<CellResult>& cells) {
  using GroupKey = std::tuple<int, std::string, double, int>;
  std::vector<GroupKey> order;
  std::map<GroupKey, std::map<std::size_t, std::vector<std::pair<double, double>>>> groups;
  for (const auto& c : cells) {
    const GroupKey g{static_cast<int>(c.op), c.kernel, c.nsr, static_cast<int>(c.regularizer)};
    if (!groups.count(g)) order.push_back(g);
    auto& per_seed = groups[g];
    if (c.ok()) per_seed[c.seed].emplace_back(c.dx, c.l2rho_error);
  }
  std::vector<RateSummary> out;
  for (const auto& g : order) {
    RateSummary s;
    s.op = static_cast<OperatorKind>(std::get<0>(g));
    s.kernel = std::get<1>(g);
    s.nsr = std::get<2>(g);
    s.regularizer = static_cast<RegularizerKind>(std::get<3>(g));
    for (const auto& [seed, pts] : groups[g]) {
      try {
        s.per_seed.push_back(fit_rate(pts));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateFit) throw;
      }
    }
    if (s.per_seed.empty()) continue;
    const double n = static_cast<double>(s.per_seed.size());
    for (double r : s.per_seed) s.mean_rate += r;
    s.mean_rate /= n;
    if (s.per_seed.size() > 1) {
      double ss = 0.0;
      for (double r : s.per_seed) ss += (r - s.mean_rate) * (r - s.mean_rate);
      s.sd_rate = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(std::move(s));
  }
  return out;
}

StudyResults run_study(const StudyConfig& cfg, const std::function<void(std::size_t, std::size_t)>& progress) {
  cfg.validate();
  // Noise-free data depends only on (operator, kernel, dx); noise is added per seed.
  struct CleanKey {
    OperatorKind op;
    std::string kernel;
    std::size_t dx_index;
  };
  std::vector<CleanKey> clean_keys;
  for (auto op : cfg.operators) {
    for (const auto& k : cfg.kernels) {
      for (std::size_t d = 0; d < cfg.dx_list.size(); ++d) clean_keys.push_back({op, k, d});
    }
  }
  std::vector<std::optional<Dataset>> clean(clean_keys.size());
  std::vector<std::string> clean_error(clean_keys.size());
  run_parallel(clean_keys.size(), cfg.workers, [&](std::size_t i) {
    const auto& ck = clean_keys[i];
    try {
      clean[i] = make_clean(cfg, ck.op, ck.kernel, cfg.dx_list[ck.dx_index]);
    } catch (const Error& e) {
      clean_error[i] = describe(e.with_stage("generate"));
    }
  });

  std::size_t finest = 0;
  for (std::size_t d = 1; d < cfg.dx_list.size(); ++d) {
    if (cfg.dx_list[d] < cfg.dx_list[finest]) finest = d;
  }

  struct Task {
    DataKey key;
    std::size_t clean_index;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0, o = 0; o < cfg.operators.size(); ++o) {
    for (std::size_t k = 0; k < cfg.kernels.size(); ++k, ci += cfg.dx_list.size()) {
      for (double nsr : cfg.nsr_list) {
        for (std::size_t d = 0; d < cfg.dx_list.size(); ++d) {
          for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
            tasks.push_back({{cfg.operators[o], cfg.kernels[k], nsr, d, s}, ci + d});
          }
        }
      }
    }
  }

  std::vector<std::vector<CellResult>> per_task(tasks.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  run_parallel(tasks.size(), cfg.workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    const auto& src = clean[t.clean_index];
    if (!src) {
      Dataset stub;
      stub.op = t.key.op;
      stub.kernel_name = canonical_kernel(t.key.kernel);
      stub.nsr = t.key.nsr;
      stub.x_grid = make_uniform_grid(cfg.x_min, cfg.x_max, cfg.dx_list[t.key.dx_index]);
      for (auto kind : cfg.regularizers) {
        CellResult c = blank_cell(stub, kind);
        c.seed = t.key.seed_index;
        c.error = clean_error[t.clean_index];
        per_task[i].push_back(std::move(c));
      }
    } else {
      const Dataset ds = add_noise(*src, t.key.nsr, dataset_seed(cfg.master_seed, t.key), cfg.noise_norm);
      const bool keep = cfg.keep_profiles && t.key.seed_index == 0 && t.key.dx_index == finest;
      per_task[i] = run_on_dataset(cfg, ds, kernel_by_name(t.key.kernel), cfg.regularizers, keep);
      for (auto& c : per_task[i]) c.seed = t.key.seed_index;
    }
    const std::size_t finished = ++done;
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(finished, tasks.size());
    }
  });

  StudyResults results;
  for (auto& group : per_task) {
    for (auto& c : group) results.cells.push_back(std::move(c));
  }
  results.rates = aggregate_rates(results.cells);
  return results;
}

}  // namespace dartr
