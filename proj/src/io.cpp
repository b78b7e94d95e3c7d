#include "dartr/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dartr/error.hpp"

namespace dartr {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, sep)) parts.push_back(item);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_key_values(const std::vector<std::string>& lines) {
  std::map<std::string, std::string> kv;
  for (const auto& line : lines) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) fail(ErrorCode::IoError, "missing field '" + key + "'");
  return it->second;
}

std::uint64_t parse_u64(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (errno != 0 || end == text.c_str() || *end != '\0') fail(ErrorCode::IoError, "bad integer '" + text + "'");
  return static_cast<std::uint64_t>(v);
}

Vector json_vector(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) fail(ErrorCode::IoError, std::string("archive lacks array '") + key + "'");
  const auto& arr = j[key];
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t == "nan") return std::nan("");
  if (t == "inf") return HUGE_VAL;
  if (t == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end == t.c_str() || *end != '\0') fail(ErrorCode::IoError, "bad number '" + text + "'");
  return v;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  const auto N = static_cast<Eigen::Index>(ds.num_pairs());
  out << "# dartr dataset v1\n"
      << "# operator=" << to_string(ds.op) << '\n'
      << "# kernel=" << ds.kernel_name << '\n'
      << "# x_min=" << format_double(ds.x_grid.x_min()) << '\n'
      << "# x_max=" << format_double(ds.x_grid.x_max()) << '\n'
      << "# dx=" << format_double(ds.x_grid.dx()) << '\n'
      << "# nsr=" << format_double(ds.nsr) << '\n'
      << "# seed=" << ds.seed << '\n'
      << "# sigma=" << format_double(ds.sigma) << '\n'
      << "# pairs=" << N << '\n';
  out << 'x';
  for (const char* prefix : {"u", "f", "fclean"}) {
    for (Eigen::Index k = 0; k < N; ++k) out << ',' << prefix << (k + 1);
  }
  out << '\n';
  const Vector& x = ds.x_grid.points();
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    out << format_double(x[j]);
    for (const Matrix* M : {&ds.u, &ds.f, &ds.f_clean}) {
      for (Eigen::Index k = 0; k < N; ++k) out << ',' << format_double((*M)(j, k));
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing dataset");
}

Dataset read_dataset_csv(std::istream& in) {
  std::vector<std::string> meta;
  std::string line;
  std::string header;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      meta.push_back(line.substr(1));
      continue;
    }
    header = trim(line);
    break;
  }
  if (header.empty()) fail(ErrorCode::IoError, "dataset has no header row");
  const auto kv = parse_key_values(meta);
  const auto N = static_cast<Eigen::Index>(parse_u64(require(kv, "pairs")));
  const auto columns = split(header, ',');
  if (static_cast<Eigen::Index>(columns.size()) != 1 + 3 * N || columns[0] != "x") {
    fail(ErrorCode::IoError, "dataset header does not match the declared pair count");
  }

  Dataset ds;
  ds.op = parse_operator(require(kv, "operator"));
  ds.kernel_name = require(kv, "kernel");
  ds.nsr = parse_double(require(kv, "nsr"));
  ds.seed = parse_u64(require(kv, "seed"));
  ds.sigma = parse_double(require(kv, "sigma"));
  ds.x_grid = make_uniform_grid(parse_double(require(kv, "x_min")), parse_double(require(kv, "x_max")),
                                parse_double(require(kv, "dx")));
  const auto J = static_cast<Eigen::Index>(ds.x_grid.size());
  ds.u.resize(J, N);
  ds.f.resize(J, N);
  ds.f_clean.resize(J, N);
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (row >= J) fail(ErrorCode::IoError, "dataset has more rows than grid points");
    const auto cells = split(trim(line), ',');
    if (static_cast<Eigen::Index>(cells.size()) != 1 + 3 * N) {
      fail(ErrorCode::IoError, "dataset row " + std::to_string(row + 1) + " has the wrong column count");
    }
    for (Eigen::Index k = 0; k < N; ++k) {
      ds.u(row, k) = parse_double(cells[static_cast<std::size_t>(1 + k)]);
      ds.f(row, k) = parse_double(cells[static_cast<std::size_t>(1 + N + k)]);
      ds.f_clean(row, k) = parse_double(cells[static_cast<std::size_t>(1 + 2 * N + k)]);
    }
    ++row;
  }
  if (row != J) fail(ErrorCode::IoError, "dataset has fewer rows than grid points");
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  auto out = open_for_write(path);
  write_dataset_csv(out, ds);
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_dataset_csv(in);
}

void write_regression_data(std::ostream& out, const RegressionData& rd) {
  nlohmann::json j;
  j["format"] = "dartr-regression-data";
  j["version"] = 1;
  j["dx"] = rd.dx();
  j["n"] = rd.size();
  std::vector<double> G;
  G.reserve(static_cast<std::size_t>(rd.G.size()));
  for (Eigen::Index r = 0; r < rd.G.rows(); ++r) {
    for (Eigen::Index c = 0; c < rd.G.cols(); ++c) G.push_back(rd.G(r, c));
  }
  j["G"] = G;
  j["gNf"] = std::vector<double>(rd.gNf.data(), rd.gNf.data() + rd.gNf.size());
  const Vector& w = rd.rho.weights();
  j["rho"] = std::vector<double>(w.data(), w.data() + w.size());
  if (std::isfinite(rd.data_energy)) j["data_energy"] = rd.data_energy;
  out << j.dump() << '\n';
  if (!out) fail(ErrorCode::IoError, "failed writing regression data");
}

RegressionData read_regression_data(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("regression archive is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "dartr-regression-data") fail(ErrorCode::IoError, "not a regression data archive");
  const double dx = j.at("dx").get<double>();
  const auto n = j.at("n").get<std::size_t>();
  const Vector flat = json_vector(j, "G");
  RegressionData rd;
  rd.gNf = json_vector(j, "gNf");
  const Vector rho = json_vector(j, "rho");
  const auto ni = static_cast<Eigen::Index>(n);
  if (flat.size() != ni * ni || rd.gNf.size() != ni || rho.size() != ni) {
    fail(ErrorCode::IoError, "regression archive arrays do not match n");
  }
  rd.G = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), ni, ni);
  rd.r_grid = make_uniform_grid(dx, static_cast<double>(n) * dx, dx);
  rd.rho = DiscreteMeasure::normalized(rd.r_grid, rho);
  if (j.contains("data_energy")) rd.data_energy = j.at("data_energy").get<double>();
  return rd;
}

void save_regression_data(const std::filesystem::path& path, const RegressionData& rd) {
  auto out = open_for_write(path);
  write_regression_data(out, rd);
}

RegressionData load_regression_data(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_regression_data(in);
}

void write_estimator_result(std::ostream& out, const EstimatorResult& res) {
  out << "# dartr estimator v1\n"
      << "regularizer=" << short_name(res.regularizer) << '\n'
      << "basis=" << to_string(res.space.kind()) << '\n'
      << "degree=" << res.space.degree() << '\n'
      << "dimension=" << res.space.dimension() << '\n'
      << "support_bound=" << format_double(res.space.support_bound()) << '\n'
      << "dx=" << format_double(res.dx) << '\n'
      << "lambda=" << format_double(res.lambda) << '\n'
      << "loss=" << format_double(res.loss) << '\n'
      << "reg_norm=" << format_double(res.reg_norm) << '\n'
      << "coefficients\n";
  for (Eigen::Index i = 0; i < res.c.size(); ++i) out << format_double(res.c[i]) << '\n';
  if (!out) fail(ErrorCode::IoError, "failed writing estimator");
}

EstimatorResult read_estimator_result(std::istream& in) {
  std::vector<std::string> head;
  std::string line;
  bool in_coeffs = false;
  std::vector<double> coeffs;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (in_coeffs) {
      coeffs.push_back(parse_double(t));
    } else if (t == "coefficients") {
      in_coeffs = true;
    } else {
      head.push_back(t);
    }
  }
  if (!in_coeffs) fail(ErrorCode::IoError, "estimator file lacks a coefficients section");
  const auto kv = parse_key_values(head);
  EstimatorResult res;
  res.regularizer = parse_regularizer(require(kv, "regularizer"));
  res.dx = parse_double(require(kv, "dx"));
  res.lambda = parse_double(require(kv, "lambda"));
  res.loss = parse_double(require(kv, "loss"));
  res.reg_norm = parse_double(require(kv, "reg_norm"));
  const auto n = static_cast<std::size_t>(parse_u64(require(kv, "dimension")));
  if (coeffs.size() != n) fail(ErrorCode::IoError, "coefficient count does not match the dimension");
  res.space = build_hypothesis_space(parse_basis(require(kv, "basis")), n, parse_double(require(kv, "support_bound")),
                                     res.dx, static_cast<int>(parse_u64(require(kv, "degree"))));
  res.c = Eigen::Map<const Vector>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return res;
}

void save_estimator_result(const std::filesystem::path& path, const EstimatorResult& res) {
  auto out = open_for_write(path);
  write_estimator_result(out, res);
}

EstimatorResult load_estimator_result(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_estimator_result(in);
}

}  // namespace dartr
