#pragma once

#include <random>

#include "lindopt/stiefel.hpp"

namespace lindopt::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline StiefelPoint random_stiefel(Index rows, Index cols, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, seed));
  return StiefelPoint{qr.householderQ() * Matrix::Identity(rows, cols)};
}

inline Matrix random_tangent(const StiefelPoint& x, std::uint64_t seed) {
  return stiefel::project_tangent(random_matrix(x.rows(), x.cols(), seed), x);
}

}  // namespace lindopt::testing
