#pragma once

#include "hubersl/types.hpp"

namespace hubersl {

struct LassoSolution {
  Vector coefficients;
  int sweeps = 0;
  bool converged = false;
};

/// Cyclic coordinate descent for
///   min_b  1/2 b' G b - c' b + penalty * |b|_1
/// where G = X'X/n and c = X'y/n for a centered design. This is the
/// Gram-matrix form of (1/2n)|y - Xb|^2 + penalty |b|_1. Stops when the
/// largest coefficient change in a sweep is below `tolerance`.
LassoSolution lasso_coordinate_descent(const Matrix& gram, const Vector& xty, double penalty,
                                       double tolerance = 1e-7, int max_sweeps = 10000,
                                       const Vector* warm_start = nullptr);

inline double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

}  // namespace hubersl
