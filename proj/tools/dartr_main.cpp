// Command-line front end: generate, fit, study, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dartr/error.hpp"
#include "dartr/harness.hpp"
#include "dartr/io.hpp"
#include "dartr/lcurve.hpp"

namespace fs = std::filesystem;
using namespace dartr;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3 };

struct Common {
  std::string config;
  std::string out;
  std::string regularizer = "all";
  bool full = false;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--regularizer", c.regularizer, "Regularizer: l2, L2, rkhs or all")
      ->check(CLI::IsMember({"l2", "L2", "rkhs", "all"}));
  cmd->add_flag("--full", c.full, "Long-running dx list and 20 seeds");
  cmd->add_option("--workers", c.workers, "Worker threads (0 = all cores)");
  cmd->add_option("--seed", c.seed, "Master seed");
}

StudyConfig resolve_config(const Common& c) {
  StudyConfig cfg = c.config.empty() ? StudyConfig{} : load_study_config(c.config);
  if (c.full) cfg.apply_full_scale();
  if (c.workers) cfg.workers = *c.workers;
  if (c.seed) cfg.master_seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.regularizer != "all") cfg.regularizers = {parse_regularizer(c.regularizer)};
  cfg.validate();
  return cfg;
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int cmd_generate(const Common& c) {
  const StudyConfig cfg = resolve_config(c);
  const fs::path dir = fs::path(cfg.output_dir) / "datasets";
  std::size_t count = 0;
  for (auto op : cfg.operators) {
    for (const auto& kname : cfg.kernels) {
      const KernelSpec kernel = kernel_by_name(kname);
      for (std::size_t d = 0; d < cfg.dx_list.size(); ++d) {
        GenerationOptions opts;
        opts.tol = cfg.quad_tol;
        const Dataset clean = generate_clean_dataset(op, kernel, standard_u_set(op),
                                                     make_uniform_grid(cfg.x_min, cfg.x_max, cfg.dx_list[d]), opts);
        for (double nsr : cfg.nsr_list) {
          for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
            const DataKey key{op, kname, nsr, d, s};
            const Dataset ds = add_noise(clean, nsr, dataset_seed(cfg.master_seed, key), cfg.noise_norm);
            const std::string name = std::string(to_string(op)) + "_" + kernel.name + "_dx" + tag(cfg.dx_list[d]) +
                                     "_nsr" + tag(nsr) + "_seed" + std::to_string(s) + ".csv";
            save_dataset(dir / name, ds);
            ++count;
          }
        }
      }
    }
  }
  std::cout << "wrote " << count << " datasets to " << dir.string() << '\n';
  return kOk;
}

int cmd_fit(const Common& c, const std::string& dataset_path, const std::string& truth_name) {
  const StudyConfig cfg = resolve_config(c);
  const Dataset ds = load_dataset(dataset_path);
  const fs::path out(cfg.output_dir);
  const PreparedData prepared = prepare_data(cfg, ds);
  save_regression_data(out / "regression_data.json", prepared.data);

  std::optional<KernelSpec> truth;
  const std::string tname = truth_name.empty() ? ds.kernel_name : truth_name;
  try {
    truth = kernel_by_name(tname);
  } catch (const Error&) {
    if (!truth_name.empty()) throw;
  }
  for (auto kind : cfg.regularizers) {
    LCurve curve;
    const EstimatorResult est = fit_prepared(cfg, prepared, kind, &curve);
    const std::string name(short_name(kind));
    save_estimator_result(out / ("estimator_" + name + ".txt"), est);
    if (curve.size() > 0) {
      auto f = open_for_write(out / ("lcurve_" + name + ".csv"));
      write_lcurve_csv(f, curve);
    }
    std::cout << name << ": n=" << est.space.dimension() << " lambda=" << format_double(est.lambda)
              << " loss=" << format_double(est.loss);
    if (truth) {
      const Vector& r = prepared.data.r_grid.points();
      Vector phi(r.size());
      const double shift = cfg.truth_sampling == TruthSampling::Midpoint ? 0.5 * prepared.data.dx() : 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) phi[i] = (*truth)(r[i] - shift);
      std::cout << " l2rho_error=" << format_double(l2rho_error(est.space.combine(est.c, r), phi, prepared.data.rho));
    }
    std::cout << '\n';
  }
  return kOk;
}

int cmd_study(const Common& c, bool quiet) {
  const StudyConfig cfg = resolve_config(c);
  auto progress = [quiet](std::size_t done, std::size_t total) {
    if (!quiet) std::cerr << "\r" << done << "/" << total << " datasets" << (done == total ? "\n" : "") << std::flush;
  };
  const StudyResults results = run_study(cfg, progress);
  emit_report(results, cfg.output_dir);
  std::size_t failed = 0;
  for (const auto& cell : results.cells) failed += cell.ok() ? 0 : 1;
  std::cout << "cells: " << results.cells.size() << " (" << failed << " failed), rate groups: "
            << results.rates.size() << ", output: " << cfg.output_dir << '\n';
  return kOk;
}

int cmd_report(const Common& c, const std::string& from) {
  const fs::path out = c.out.empty() ? fs::path(from) : fs::path(c.out);
  const fs::path src = from.empty() ? out : fs::path(from);
  if (src.empty()) fail(ErrorCode::ConfigError, "report needs --out or --from");
  const StudyResults results = load_study_results(src);
  emit_plots(results, out);
  std::cout << "plots written to " << (out / "plots").string() << '\n';
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return kConfig;
    case ErrorCategory::Io: return kIo;
    case ErrorCategory::Numerical: return kNumerical;
  }
  return kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-adaptive RKHS regularization for learning radial kernels in operators"};
  app.require_subcommand(1);

  Common generate_opts, fit_opts, study_opts, report_opts;
  auto* generate = app.add_subcommand("generate", "Write synthetic datasets described by a config");
  add_common(generate, generate_opts);

  auto* fit = app.add_subcommand("fit", "Fit one dataset and dump estimators and L-curves");
  add_common(fit, fit_opts);
  std::string dataset_path, truth_name;
  fit->add_option("--dataset", dataset_path, "Dataset CSV")->required();
  fit->add_option("--truth", truth_name, "Kernel to measure the error against (defaults to the dataset's)");

  auto* study = app.add_subcommand("study", "Run a convergence study and write CSVs and plots");
  add_common(study, study_opts);
  bool quiet = false;
  study->add_flag("--quiet", quiet, "No progress output");

  auto* report = app.add_subcommand("report", "Render plot data and SVGs from study CSVs");
  add_common(report, report_opts);
  std::string from;
  report->add_option("--from", from, "Study directory to read (defaults to --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*generate) return cmd_generate(generate_opts);
    if (*fit) return cmd_fit(fit_opts, dataset_path, truth_name);
    if (*study) return cmd_study(study_opts, quiet);
    if (*report) return cmd_report(report_opts, from);
  } catch (const Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " (" << e.stage() << ")";
    std::cerr << ": " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
