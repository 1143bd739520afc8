#pragma once

#include <cstdint>
#include <string>

#include "hubersl/learners.hpp"
#include "hubersl/super_learner.hpp"

namespace hubersl {

inline constexpr double kPropensityLower = 0.01;
inline constexpr double kPropensityUpper = 0.99;

struct AteEstimate {
  std::string label;
  double estimate = 0.0;
  double epsilon = 0.0;
  double g_min = 0.0;
  double g_max = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  /// sum_i H_i (y_i - Q*(A_i, X_i)) on the scale of the fluctuation.
  double score = 0.0;
};

/// Main-terms logistic regression of the treatment on adjustment covariates.
struct PropensityModel {
  LearnerPtr model;
  double intercept = 0.0;
  Vector coefficients;
  FitLog log;

  /// Fitted probabilities clipped into [0.01, 0.99].
  [[nodiscard]] Vector predict(const Matrix& X_adjust) const;
};

/// Throws DataError unless `a` is 0/1 with both values present.
void check_binary_treatment(const Vector& a);

PropensityModel fit_propensity(const Matrix& X_adjust, const Vector& a, std::uint64_t seed);

/// mean(y | a = 1) - mean(y | a = 0).
AteEstimate unadjusted_ate(const Vector& y, const Vector& a);

enum class Fluctuation { Linear, Logistic };

std::string to_string(Fluctuation f);
Fluctuation fluctuation_from_string(const std::string& s);

/// Targeting step from initial predictions. Linear: least squares of the
/// residual on H. Logistic: outcome and predictions are mapped into [0, 1] by
/// the observed range, epsilon solves the logistic score with offset logit(Q).
AteEstimate tmle_from_predictions(const Vector& y, const Vector& a, const Vector& q_a, const Vector& q1,
                                  const Vector& q0, const Vector& g, Fluctuation fluctuation = Fluctuation::Linear);

/// data.X must carry the treatment as column 0, followed by the adjustment
/// covariates; the propensity model sees columns 1..p-1.
AteEstimate tmle_ate(const Dataset& data, const SuperLearnerModel& outcome_model,
                     const PropensityModel& propensity, Fluctuation fluctuation = Fluctuation::Linear);

}  // namespace hubersl
