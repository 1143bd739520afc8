#include <cmath>
#include <limits>

#include "hubersl/cross_validation.hpp"
#include "hubersl/lasso_solver.hpp"
#include "hubersl/learners.hpp"
#include "hubersl/rng.hpp"
#include "internal.hpp"

namespace hubersl {

LassoSolution lasso_coordinate_descent(const Matrix& gram, const Vector& xty, double penalty,
                                       double tolerance, int max_sweeps,
                                       const Vector* warm_start) {
  const Eigen::Index p = gram.rows();
  LassoSolution sol;
  sol.coefficients = warm_start ? *warm_start : Vector::Zero(p);
  // gb tracks gram * b so each coordinate update is O(p).
  Vector gb = gram * sol.coefficients;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      const double old = sol.coefficients[j];
      double updated = 0.0;
      if (gjj > 0.0) {
        const double rho = xty[j] - (gb[j] - gjj * old);
        updated = soft_threshold(rho, penalty) / gjj;
      }
      const double delta = updated - old;
      if (delta != 0.0) {
        sol.coefficients[j] = updated;
        gb.noalias() += delta * gram.col(j);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    sol.sweeps = sweep + 1;
    if (max_change < tolerance) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

namespace detail {

namespace {

struct StandardizedProblem {
  Standardizer st;
  double ybar = 0.0;
  Matrix gram;
  Vector xty;
};

StandardizedProblem standardize_problem(const Matrix& X, const Vector& y) {
  StandardizedProblem sp;
  const auto n = static_cast<double>(X.rows());
  sp.st = Standardizer::fit(X);
  const Matrix Xs = sp.st.apply(X);
  sp.ybar = y.mean();
  sp.gram = Xs.transpose() * Xs / n;
  sp.xty = Xs.transpose() * (y.array() - sp.ybar).matrix() / n;
  return sp;
}

LinearFit to_original_scale(const StandardizedProblem& sp, const Vector& b) {
  LinearFit f;
  f.coefficients = b.array() / sp.st.scale.array();
  f.intercept = sp.ybar - sp.st.mean.dot(f.coefficients);
  return f;
}

// Decreasing log-spaced penalties from the smallest penalty that zeroes
// every coefficient down to 1e-3 of it.
std::vector<double> penalty_grid(double max_penalty, int size) {
  std::vector<double> grid;
  if (size == 1) return {max_penalty};
  const double ratio = 1e-3;
  for (int g = 0; g < size; ++g) {
    grid.push_back(max_penalty * std::pow(ratio, static_cast<double>(g) / (size - 1)));
  }
  return grid;
}

}  // namespace

LearnerPtr fit_lasso(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                     std::uint64_t seed) {
  const double tol = spec.param("tolerance", 1e-7);
  const int max_sweeps = static_cast<int>(spec.param("max_sweeps", 10000));
  const StandardizedProblem full = standardize_problem(X, y);
  const auto p = static_cast<std::size_t>(X.cols());

  double penalty = 0.0;
  if (spec.has("penalty")) {
    penalty = spec.param("penalty", 0.0);
  } else {
    const double max_penalty = full.xty.cwiseAbs().maxCoeff();
    if (max_penalty <= 0.0) {
      return make_linear_model(spec, p, default_clamp(y), full.ybar, Vector::Zero(X.cols()));
    }
    const auto grid = penalty_grid(max_penalty, static_cast<int>(spec.param("grid_size", 50)));
    const auto n = static_cast<std::size_t>(X.rows());
    const std::size_t folds = std::min<std::size_t>(static_cast<std::size_t>(spec.param("cv_folds", 5)), n);
    const FoldPlan plan = make_folds(n, folds, derive_seed(seed, {0x1a550ULL}));
    std::vector<double> cv_error(grid.size(), 0.0);
    for (std::size_t v = 0; v < folds; ++v) {
      const auto tr = plan.training_indices(v);
      const auto va = plan.validation_indices(v);
      const StandardizedProblem sp = standardize_problem(select_rows(X, tr), select_rows(y, tr));
      const Matrix Xv = select_rows(X, va);
      const Vector yv = select_rows(y, va);
      Vector b = Vector::Zero(X.cols());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        b = lasso_coordinate_descent(sp.gram, sp.xty, grid[g], tol, max_sweeps, &b).coefficients;
        const LinearFit f = to_original_scale(sp, b);
        const Vector resid = yv - ((Xv * f.coefficients).array() + f.intercept).matrix();
        cv_error[g] += resid.squaredNorm();
      }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (cv_error[g] < cv_error[best]) best = g;
    }
    penalty = grid[best];
  }
  const LassoSolution sol = lasso_coordinate_descent(full.gram, full.xty, penalty, tol, max_sweeps);
  LinearFit f = to_original_scale(full, sol.coefficients);
  return make_linear_model(spec, p, default_clamp(y), f.intercept, std::move(f.coefficients));
}

}  // namespace detail
}  // namespace hubersl
