#include <set>
#include <sstream>

#include <json.hpp>

#include "dartr/error.hpp"
#include "dartr/harness.hpp"
#include "dartr/io.hpp"

namespace dartr {
namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "operators",     "kernels",      "dx_list",    "nsr_list",       "n_seeds",      "seed",
      "regularizers",  "basis",        "degree",     "dimension_policy", "n_candidates", "x_min",
      "x_max",         "explore_radius", "n_lambda", "lambda_floor",   "rank_tol",     "truth_sampling",
      "noise_norm",    "lcurve_loss",  "quad_tol",      "workers",      "record_timing", "keep_profiles", "output_dir"};
  return keys;
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "key '" + key + "' has the wrong type: " + e.what());
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(ErrorCode::ConfigError, "key '" + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

template <class T, class Parse>
std::vector<T> get_list(const json& j, const std::string& key, Parse parse) {
  const json& v = j.at(key);
  if (!v.is_array()) fail(ErrorCode::ConfigError, "key '" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& item : v) {
    if (!item.is_string()) fail(ErrorCode::ConfigError, "key '" + key + "' must list strings");
    out.push_back(parse(item.get<std::string>()));
  }
  return out;
}

std::string dimension_policy_name(DimensionPolicy p) { return p == DimensionPolicy::Full ? "full" : "range"; }
std::string lambda_floor_name(LambdaFloor f) {
  return f == LambdaFloor::SmallestRetained ? "retained" : "positive";
}
std::string truth_sampling_name(TruthSampling t) { return t == TruthSampling::Midpoint ? "midpoint" : "node"; }
std::string lcurve_loss_name(LCurveLoss l) { return l == LCurveLoss::Excess ? "excess" : "full"; }
std::string noise_norm_name(NoiseNorm n) { return n == NoiseNorm::Rms ? "rms" : "l2"; }

}  // namespace

void StudyConfig::apply_full_scale() {
  dx_list = {0.0125, 0.025, 0.05, 0.1, 0.2};
  n_seeds = 20;
}

void StudyConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::ConfigError, msg); };
  if (operators.empty()) bad("operators must not be empty");
  if (kernels.empty()) bad("kernels must not be empty");
  if (regularizers.empty()) bad("regularizers must not be empty");
  if (dx_list.empty()) bad("dx_list must not be empty");
  if (nsr_list.empty()) bad("nsr_list must not be empty");
  if (n_seeds < 1) bad("n_seeds must be at least 1");
  if (!(x_max > x_min)) bad("x_max must exceed x_min");
  for (double dx : dx_list) {
    if (!(dx > 0.0)) bad("dx_list entries must be positive");
    try {
      (void)commensurate_cells(x_max - x_min, dx);
    } catch (const Error& e) {
      bad(std::string("dx_list entry does not divide the x-domain: ") + e.what());
    }
  }
  if (std::set<double>(dx_list.begin(), dx_list.end()).size() != dx_list.size()) bad("dx_list has duplicates");
  for (double nsr : nsr_list) {
    if (!(nsr >= 0.0)) bad("nsr_list entries must be nonnegative");
  }
  for (const auto& k : kernels) {
    try {
      (void)kernel_by_name(k);
    } catch (const Error& e) {
      bad(e.what());
    }
  }
  if (!(explore_radius > 0.0)) bad("explore_radius must be positive");
  if (n_lambda < 5) bad("n_lambda must be at least 5");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) bad("rank_tol must lie in (0, 1)");
  if (!(quad_tol > 0.0)) bad("quad_tol must be positive");
  if (degree < 0) bad("degree must be nonnegative");
  if (basis == BasisKind::PiecewiseConstant && degree != 0) bad("piecewise-constant basis has degree 0");
  if (dimension_policy == DimensionPolicy::Range && n_candidates < 1) bad("n_candidates must be at least 1");
}

StudyConfig parse_study_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known_keys().count(item.key())) fail(ErrorCode::ConfigError, "unknown config key '" + item.key() + "'");
  }

  StudyConfig cfg;
  try {
    if (j.contains("operators")) {
      cfg.operators = get_list<OperatorKind>(j, "operators", [](const std::string& s) { return parse_operator(s); });
    }
    if (j.contains("kernels")) {
      cfg.kernels = get_list<std::string>(j, "kernels", [](const std::string& s) { return s; });
    }
    if (j.contains("regularizers")) {
      cfg.regularizers =
          get_list<RegularizerKind>(j, "regularizers", [](const std::string& s) { return parse_regularizer(s); });
    }
    if (j.contains("dx_list")) cfg.dx_list = get_as<std::vector<double>>(j, "dx_list");
    if (j.contains("nsr_list")) cfg.nsr_list = get_as<std::vector<double>>(j, "nsr_list");
    if (j.contains("n_seeds")) cfg.n_seeds = get_count(j, "n_seeds");
    if (j.contains("seed")) cfg.master_seed = get_as<std::uint64_t>(j, "seed");
    if (j.contains("basis")) cfg.basis = parse_basis(get_as<std::string>(j, "basis"));
    if (j.contains("degree")) cfg.degree = get_as<int>(j, "degree");
    if (j.contains("dimension_policy")) {
      const auto p = get_as<std::string>(j, "dimension_policy");
      if (p == "full") {
        cfg.dimension_policy = DimensionPolicy::Full;
      } else if (p == "range") {
        cfg.dimension_policy = DimensionPolicy::Range;
      } else {
        fail(ErrorCode::ConfigError, "dimension_policy must be full or range");
      }
    }
    if (j.contains("n_candidates")) cfg.n_candidates = get_count(j, "n_candidates");
    if (j.contains("x_min")) cfg.x_min = get_as<double>(j, "x_min");
    if (j.contains("x_max")) cfg.x_max = get_as<double>(j, "x_max");
    if (j.contains("explore_radius")) cfg.explore_radius = get_as<double>(j, "explore_radius");
    if (j.contains("n_lambda")) cfg.n_lambda = get_count(j, "n_lambda");
    if (j.contains("lambda_floor")) {
      const auto f = get_as<std::string>(j, "lambda_floor");
      if (f == "retained") {
        cfg.lambda_floor = LambdaFloor::SmallestRetained;
      } else if (f == "positive") {
        cfg.lambda_floor = LambdaFloor::SmallestPositive;
      } else {
        fail(ErrorCode::ConfigError, "lambda_floor must be retained or positive");
      }
    }
    if (j.contains("rank_tol")) cfg.rank_tol = get_as<double>(j, "rank_tol");
    if (j.contains("truth_sampling")) {
      const auto t = get_as<std::string>(j, "truth_sampling");
      if (t == "midpoint") {
        cfg.truth_sampling = TruthSampling::Midpoint;
      } else if (t == "node") {
        cfg.truth_sampling = TruthSampling::Node;
      } else {
        fail(ErrorCode::ConfigError, "truth_sampling must be midpoint or node");
      }
    }
    if (j.contains("lcurve_loss")) {
      const auto l = get_as<std::string>(j, "lcurve_loss");
      if (l == "excess") {
        cfg.lcurve_loss = LCurveLoss::Excess;
      } else if (l == "full") {
        cfg.lcurve_loss = LCurveLoss::Full;
      } else {
        fail(ErrorCode::ConfigError, "lcurve_loss must be excess or full");
      }
    }
    if (j.contains("noise_norm")) {
      const auto n = get_as<std::string>(j, "noise_norm");
      if (n == "rms") {
        cfg.noise_norm = NoiseNorm::Rms;
      } else if (n == "l2") {
        cfg.noise_norm = NoiseNorm::L2;
      } else {
        fail(ErrorCode::ConfigError, "noise_norm must be rms or l2");
      }
    }
    if (j.contains("quad_tol")) cfg.quad_tol = get_as<double>(j, "quad_tol");
    if (j.contains("workers")) cfg.workers = get_count(j, "workers");
    if (j.contains("record_timing")) cfg.record_timing = get_as<bool>(j, "record_timing");
    if (j.contains("keep_profiles")) cfg.keep_profiles = get_as<bool>(j, "keep_profiles");
    if (j.contains("output_dir")) cfg.output_dir = get_as<std::string>(j, "output_dir");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, e.what());
  }
  cfg.validate();
  return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_study_config(text.str());
}

std::string dump_study_config(const StudyConfig& cfg) {
  json j;
  std::vector<std::string> ops, regs;
  for (auto op : cfg.operators) ops.emplace_back(to_string(op));
  for (auto r : cfg.regularizers) regs.emplace_back(short_name(r));
  j["operators"] = ops;
  j["kernels"] = cfg.kernels;
  j["dx_list"] = cfg.dx_list;
  j["nsr_list"] = cfg.nsr_list;
  j["n_seeds"] = cfg.n_seeds;
  j["seed"] = cfg.master_seed;
  j["regularizers"] = regs;
  j["basis"] = std::string(to_string(cfg.basis));
  j["degree"] = cfg.degree;
  j["dimension_policy"] = dimension_policy_name(cfg.dimension_policy);
  j["n_candidates"] = cfg.n_candidates;
  j["x_min"] = cfg.x_min;
  j["x_max"] = cfg.x_max;
  j["explore_radius"] = cfg.explore_radius;
  j["n_lambda"] = cfg.n_lambda;
  j["lambda_floor"] = lambda_floor_name(cfg.lambda_floor);
  j["rank_tol"] = cfg.rank_tol;
  j["truth_sampling"] = truth_sampling_name(cfg.truth_sampling);
  j["lcurve_loss"] = lcurve_loss_name(cfg.lcurve_loss);
  j["noise_norm"] = noise_norm_name(cfg.noise_norm);
  j["quad_tol"] = cfg.quad_tol;
  j["workers"] = cfg.workers;
  j["record_timing"] = cfg.record_timing;
  j["keep_profiles"] = cfg.keep_profiles;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace dartr
