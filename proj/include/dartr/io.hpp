#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>

#include "dartr/assembly.hpp"
#include "dartr/operators.hpp"
#include "dartr/regsolve.hpp"

namespace dartr {

/// Shortest text that reads back to the same double ("%.17g"); nan and inf
/// are written as nan, inf, -inf.
std::string format_double(double v);

/// Parses a number written by format_double. Throws IoError on garbage.
double parse_double(const std::string& text);

/// Dataset as CSV. Leading '#' lines carry key=value metadata (operator,
/// kernel, x_min, x_max, dx, nsr, seed, sigma, pairs), followed by the header
/// x,u1..uN,f1..fN,fclean1..fcleanN and one row per grid point.
void write_dataset_csv(std::ostream& out, const Dataset& ds);
Dataset read_dataset_csv(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

/// RegressionData as a JSON archive with keys format, version, dx, n, G
/// (row-major), gNf and rho.
void write_regression_data(std::ostream& out, const RegressionData& rd);
RegressionData read_regression_data(std::istream& in);
void save_regression_data(const std::filesystem::path& path, const RegressionData& rd);
RegressionData load_regression_data(const std::filesystem::path& path);

/// EstimatorResult as key=value lines followed by one coefficient per line.
void write_estimator_result(std::ostream& out, const EstimatorResult& res);
EstimatorResult read_estimator_result(std::istream& in);
void save_estimator_result(const std::filesystem::path& path, const EstimatorResult& res);
EstimatorResult load_estimator_result(const std::filesystem::path& path);

/// Creates the parent directories and opens `path` for writing; IoError on failure.
std::ofstream open_for_write(const std::filesystem::path& path);
std::ifstream open_for_read(const std::filesystem::path& path);

}  // namespace dartr
