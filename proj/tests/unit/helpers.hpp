#pragma once

#include <cmath>
#include <random>

#include "hubersl/types.hpp"

namespace testing {

using hubersl::Matrix;
using hubersl::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  Matrix X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = d(rng);
  return X;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  return random_matrix(rng, n, 1, sd).col(0);
}

/// Linear signal plus heavy-tailed noise.
inline hubersl::Dataset linear_data(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  hubersl::Dataset d;
  d.X = random_matrix(rng, n, p);
  Vector beta = Vector::LinSpaced(p, 1.0, -1.0);
  std::student_t_distribution<double> t(3.0);
  d.y = d.X * beta;
  for (Eigen::Index i = 0; i < n; ++i) d.y[i] += t(rng);
  for (Eigen::Index j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j));
  return d;
}

}  // namespace testing
