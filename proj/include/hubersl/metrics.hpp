#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hubersl/types.hpp"

namespace hubersl {

inline constexpr const char* kToolVersion = "0.1.0";

struct Scores {
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
};

/// Test-set MSE, MAE and R^2. Throws std::invalid_argument on empty or
/// mismatched input and when y has zero variance.
Scores score(const Vector& y_true, const Vector& y_pred);

/// Aggregated metrics of one estimator. Relative entries are ratios against
/// the reference estimator (1 for the reference itself).
struct MetricsReport {
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double relative_mse = 1.0;
  double re = 1.0;
};

MetricsReport relative_report(const Scores& mean_scores, const Scores& reference_mean_scores);

/// One-way random-effects ICC(1,1) of paired ratings.
double icc_1_1(const Vector& a, const Vector& b);

/// ICC(1,1) on log10 of paired lambda selections.
double icc(const Vector& lambda_train, const Vector& lambda_holdout);

/// Fraction of pairs that selected the same grid index.
double lambda_match_accuracy(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

/// Digest of the compact JSON dump (object keys are sorted, so the text is canonical).
std::string config_digest(const nlohmann::json& config);

struct RunManifest {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string tool_version = kToolVersion;
  double elapsed_seconds = 0.0;
  std::size_t replications = 0;
  std::size_t failed_replications = 0;

  [[nodiscard]] nlohmann::json to_json() const;
};

}  // namespace hubersl
