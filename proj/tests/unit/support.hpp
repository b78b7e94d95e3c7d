#pragma once

#include <doctest.h>

#include <cstdint>
#include <random>

#include "dartr/error.hpp"
#include "dartr/grid.hpp"

namespace dartr::test {

/// Checks that `expr` throws dartr::Error with the given code.
#define CHECK_THROWS_CODE(expr, expected_code)                     \
  do {                                                             \
    bool dartr_thrown_ = false;                                    \
    try {                                                          \
      (void)(expr);                                                \
    } catch (const ::dartr::Error& dartr_e_) {                     \
      dartr_thrown_ = true;                                        \
      CHECK_MESSAGE(dartr_e_.code() == (expected_code), dartr_e_.what()); \
    }                                                              \
    CHECK_MESSAGE(dartr_thrown_, "expected a dartr::Error");       \
  } while (false)

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) { return random_matrix(rng, n, 1).col(0); }

/// Well-conditioned symmetric positive definite matrix.
inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double shift = 0.5) {
  const Matrix m = random_matrix(rng, n, n);
  return m * m.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n);
}

/// Symmetric positive semidefinite matrix of the given rank.
inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  const Matrix m = random_matrix(rng, n, rank);
  return m * m.transpose();
}

inline double relative_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.norm());
  return (a - b).norm() / scale;
}

}  // namespace dartr::test
