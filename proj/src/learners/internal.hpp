#pragma once

#include <cstdint>

#include "hubersl/learners.hpp"

namespace hubersl::detail {

// Fits without touching the public fit counter; composites use these.
LearnerPtr fit_uncounted(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                         std::uint64_t seed, FitLog* log);

LearnerPtr fit_mean(const LearnerSpec& spec, const Matrix& X, const Vector& y);
LearnerPtr fit_ols(const LearnerSpec& spec, const Matrix& X, const Vector& y, FitLog* log);
LearnerPtr fit_ridge(const LearnerSpec& spec, const Matrix& X, const Vector& y);
LearnerPtr fit_lasso(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                     std::uint64_t seed);
LearnerPtr fit_knn(const LearnerSpec& spec, const Matrix& X, const Vector& y);
LearnerPtr fit_tree(const LearnerSpec& spec, const Matrix& X, const Vector& y);
LearnerPtr fit_forest(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                      std::uint64_t seed);
LearnerPtr fit_logistic(const LearnerSpec& spec, const Matrix& X, const Vector& y, FitLog* log);
LearnerPtr fit_two_stage_uncounted(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                                  std::uint64_t seed, FitLog* log);

LearnerPtr mean_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                          const nlohmann::json& state);
LearnerPtr linear_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                            const nlohmann::json& state);
LearnerPtr knn_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                         const nlohmann::json& state);
LearnerPtr tree_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                          const nlohmann::json& state);
LearnerPtr forest_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                            const nlohmann::json& state);
LearnerPtr logistic_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                              const nlohmann::json& state);
LearnerPtr two_stage_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                               const nlohmann::json& state);

/// Column means and population standard deviations; zero deviations become 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& X);
  [[nodiscard]] Matrix apply(const Matrix& X) const;
};

std::vector<double> to_std_vector(const Vector& v);
Vector from_json_vector(const nlohmann::json& j);

void record(FitLog* log, const LearnerSpec& spec, std::string message);

/// Base for models whose constructor needs access to the protected FittedLearner ctor.
class ModelBase : public FittedLearner {
 protected:
  using FittedLearner::FittedLearner;
};

}  // namespace hubersl::detail

namespace hubersl::detail {

LearnerPtr make_linear_model(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                             double intercept, Vector coefficients);

/// Ridge on the standardized design with an unpenalized intercept; the
/// returned coefficients are on the original scale.
struct LinearFit {
  double intercept = 0.0;
  Vector coefficients;
};
LinearFit ridge_solve(const Matrix& X, const Vector& y, double penalty);

}  // namespace hubersl::detail

namespace hubersl::detail {

/// Penalized IRLS for a main-terms logistic model with unpenalized intercept.
struct LogisticFit {
  double intercept = 0.0;
  Vector coefficients;
  int iterations = 0;
  bool converged = false;
  bool separated = false;
};
LogisticFit logistic_irls(const Matrix& X, const Vector& y, double ridge, int max_iterations,
                          double tolerance);

double logistic_probability(double eta);

}  // namespace hubersl::detail
