#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dartr/assembly.hpp"
#include "dartr/basis.hpp"
#include "dartr/lcurve.hpp"
#include "dartr/operators.hpp"
#include "dartr/regsolve.hpp"

namespace dartr {

/// Where the true kernel is sampled when measuring the error of a
/// piecewise-constant estimate on the cells ((k-1)dx, k dx].
enum class TruthSampling { Midpoint, Node };

/// How candidate dimensions are chosen for each dataset.
enum class DimensionPolicy {
  Full,   ///< only n = R/dx (piecewise constant on the data mesh)
  Range,  ///< `n_candidates` values spread over the admissible range
};

struct StudyConfig {
  std::vector<OperatorKind> operators{OperatorKind::LinearIntegral, OperatorKind::NonlinearMeanField,
                                      OperatorKind::Nonlocal};
  std::vector<std::string> kernels{"sine", "gaussian"};
  std::vector<double> dx_list{0.025, 0.05, 0.1, 0.2};
  std::vector<double> nsr_list{0.0, 0.1, 0.5, 1.0, 2.0};
  std::size_t n_seeds = 5;
  std::uint64_t master_seed = 20230601;
  std::vector<RegularizerKind> regularizers{RegularizerKind::ProjectedL2small, RegularizerKind::ProjectedL2rho,
                                            RegularizerKind::SidaRkhs};
  BasisKind basis = BasisKind::PiecewiseConstant;
  int degree = 0;
  DimensionPolicy dimension_policy = DimensionPolicy::Full;
  std::size_t n_candidates = 5;
  double x_min = -40.0;
  double x_max = 40.0;
  NoiseNorm noise_norm = NoiseNorm::Rms;
  double explore_radius = 10.0;
  std::size_t n_lambda = kDefaultLambdaCount;
  LambdaFloor lambda_floor = LambdaFloor::SmallestRetained;
  LCurveLoss lcurve_loss = LCurveLoss::Excess;
  double rank_tol = kDefaultRankTol;
  TruthSampling truth_sampling = TruthSampling::Midpoint;
  double quad_tol = 1e-10;
  std::size_t workers = 1;
  /// When false wall_time_s is written as 0 so outputs are byte-reproducible.
  bool record_timing = true;
  /// Keep estimator-vs-truth profiles for the first seed of every cell.
  bool keep_profiles = true;
  std::string output_dir = "dartr_out";

  /// Long-running scale: dx = 0.0125 x {1,2,4,8,16} and 20 seeds.
  void apply_full_scale();
  /// Throws ConfigError for an inconsistent configuration.
  void validate() const;
};

/// Parses a JSON configuration. Unknown keys and malformed values raise ConfigError.
StudyConfig parse_study_config(const std::string& json_text);
StudyConfig load_study_config(const std::filesystem::path& path);
/// JSON text of every key with its current value.
std::string dump_study_config(const StudyConfig& cfg);

/// One simulated dataset: all regularizers of a study share it.
struct DataKey {
  OperatorKind op = OperatorKind::LinearIntegral;
  std::string kernel;
  double nsr = 0.0;
  std::size_t dx_index = 0;
  std::size_t seed_index = 0;
};

struct CellKey {
  DataKey data;
  RegularizerKind regularizer = RegularizerKind::SidaRkhs;
};

/// Estimator and truth on the data r-grid, with the exploration density.
struct Profile {
  Vector r;
  Vector estimate;
  Vector truth;
  Vector rho;
};

struct CellResult {
  OperatorKind op = OperatorKind::LinearIntegral;
  std::string kernel;
  double nsr = 0.0;
  double dx = 0.0;
  std::size_t seed = 0;
  RegularizerKind regularizer = RegularizerKind::SidaRkhs;
  std::size_t n = 0;
  double lambda = 0.0;
  double loss = 0.0;
  double l2rho_error = 0.0;
  double wall_time_s = 0.0;
  /// Empty on success; otherwise "<stage>: <code>: <message>".
  std::string error;
  std::optional<Profile> profile;

  bool ok() const { return error.empty(); }
};

struct RateSummary {
  OperatorKind op = OperatorKind::LinearIntegral;
  std::string kernel;
  double nsr = 0.0;
  RegularizerKind regularizer = RegularizerKind::SidaRkhs;
  double mean_rate = 0.0;
  double sd_rate = 0.0;
  std::vector<double> per_seed;
};

struct StudyResults {
  std::vector<CellResult> cells;
  std::vector<RateSummary> rates;
};

/// Fitting options shared by the study, the CLI and the bindings.
struct FitOptions {
  std::size_t n_lambda = kDefaultLambdaCount;
  LambdaFloor lambda_floor = LambdaFloor::SmallestRetained;
  LCurveLoss lcurve_loss = LCurveLoss::Excess;
  double rank_tol = kDefaultRankTol;
};

/// Regularized estimator in one hypothesis space with lambda from the
/// L-curve. A spectral range that collapses to a point uses that value.
EstimatorResult fit_estimator(const RegressionTriplet& triplet, RegularizerKind kind,
                              const FitOptions& options = {}, LCurve* curve_out = nullptr);

/// Same, reusing an existing decomposition of the triplet.
EstimatorResult fit_estimator(const SpectralSystem& sys, const HypothesisSpace& space, double dx,
                              RegularizerKind kind, const FitOptions& options = {}, LCurve* curve_out = nullptr);

/// Index of the smallest loss; ties go to the smaller dimension.
/// Throws NoCandidates for an empty list.
std::size_t select_dimension(const std::vector<EstimatorResult>& candidates);

/// Least-squares slope of log(error) on log(dx). Throws DegenerateFit with
/// fewer than two distinct dx values or a nonpositive error.
double fit_rate(const std::vector<std::pair<double, double>>& dx_error);

/// Seed of the noise stream of one dataset; independent of the regularizer.
std::uint64_t dataset_seed(std::uint64_t master_seed, const DataKey& key);

/// Candidate dimensions for a support bound under the configured policy.
std::vector<std::size_t> candidate_dimensions(const StudyConfig& cfg, double R, double dx);

/// Support bound for a dataset. When some output has no sample above its
/// noise threshold (identically zero or noise-dominated) the outputs carry no
/// range information and 1.1 * R_rho, snapped to the mesh, is used.
double support_for(const Dataset& ds, const DiscreteMeasure& rho);

/// Exploration measure, support, regression data and one decomposed system
/// per candidate dimension.
struct PreparedData {
  RegressionData data;
  std::vector<HypothesisSpace> spaces;
  std::vector<SpectralSystem> systems;
};

FitOptions fit_options(const StudyConfig& cfg);

/// Errors are rethrown tagged with the failing stage.
PreparedData prepare_data(const StudyConfig& cfg, const Dataset& ds);

/// Fits every candidate and keeps the smallest loss. `curve_out` receives the
/// L-curve of the chosen candidate.
EstimatorResult fit_prepared(const StudyConfig& cfg, const PreparedData& p, RegularizerKind kind,
                             LCurve* curve_out = nullptr);

/// Runs the pipeline on an existing dataset for each requested regularizer.
/// Failures are caught per regularizer and recorded in CellResult::error.
std::vector<CellResult> run_on_dataset(const StudyConfig& cfg, const Dataset& ds, const KernelSpec& truth,
                                       const std::vector<RegularizerKind>& regularizers, bool keep_profile);

/// Generates the dataset for `key` and runs every configured regularizer.
std::vector<CellResult> run_data_cell(const StudyConfig& cfg, const DataKey& key);

/// One (dataset, regularizer) cell.
CellResult run_cell(const StudyConfig& cfg, const CellKey& key);

/// Per-seed rates aggregated over (operator, kernel, nsr, regularizer).
/// Failed cells are skipped; groups without any fit are omitted.
std::vector<RateSummary> aggregate_rates(const std::vector<CellResult>& cells);

/// All cells of the configuration, then the rate summaries. Results are in
/// a fixed order regardless of the worker count.
StudyResults run_study(const StudyConfig& cfg,
                       const std::function<void(std::size_t, std::size_t)>& progress = {});

/// Writes cells.csv, rates.csv, profiles/ and plots/ under out_dir.
/// Throws IoError for an empty cell list (nothing is written) or on failure.
void emit_report(const StudyResults& results, const std::filesystem::path& out_dir);

/// Writes only the plot data and SVG renderings.
void emit_plots(const StudyResults& results, const std::filesystem::path& out_dir);

/// Reads cells.csv and any profiles/ from a previous study directory.
StudyResults load_study_results(const std::filesystem::path& dir);

void write_cells_csv(std::ostream& out, const std::vector<CellResult>& cells);
void write_rates_csv(std::ostream& out, const std::vector<RateSummary>& rates);
std::vector<CellResult> read_cells_csv(std::istream& in);

}  // namespace dartr
