#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hubersl/metrics.hpp"
#include "hubersl/report.hpp"
#include "hubersl/simulation.hpp"
#include "hubersl/super_learner.hpp"
#include "hubersl/tmle.hpp"

namespace hubersl {

/// Draws `rows` observations; deterministic in `seed`.
using DataGenerator = std::function<Dataset(std::size_t rows, std::uint64_t seed)>;

DataGenerator cost_generator(const CostScenario& scenario, const CovariateSpec& covariates = {});

/// OLS, lasso (internal CV), k-nearest neighbours and a random forest.
LearnerRegistry default_experiment_library();

struct PredictionExperimentConfig {
  std::string scenario = "custom";
  DataGenerator generator;
  std::size_t n_train = 250;
  std::size_t n_test = 5000;
  std::size_t replications = 200;
  /// An empty lambda grid means default_lambda_grid(y_train, grid_size) per replication.
  FamilyConfig family;
  std::uint64_t seed = 1;
  /// Replications run in parallel; each replication is single-threaded.
  std::size_t workers = 1;
};

struct PredictionRow {
  std::size_t replication = 0;
  std::string estimator;
  Scores scores;
  std::optional<double> lambda;
};

struct EstimatorSummary {
  std::string estimator;
  MetricsReport metrics;
  /// Monte Carlo standard error of the mean test MSE.
  double mse_se = 0.0;
  bool has_reference = false;
  std::size_t replications = 0;
};

struct PredictionReport {
  std::string scenario;
  std::vector<PredictionRow> rows;
  std::vector<EstimatorSummary> summary;
  std::vector<std::string> failures;
  double mean_train_outlier_fraction = 0.0;
  double mean_train_zero_fraction = 0.0;

  [[nodiscard]] const EstimatorSummary& find(const std::string& estimator) const;
  [[nodiscard]] Report to_report() const;
};

/// Reference for relative metrics: standard-discrete for discrete variants,
/// standard-sl for ensembles.
std::string reference_estimator(Estimator e);

PredictionReport run_prediction_experiment(const PredictionExperimentConfig& config);

struct AteExperimentConfig {
  TweedieScenario scenario = TweedieScenario::medium();
  CovariateSpec covariates;
  std::size_t n = 1000;
  std::size_t replications = 200;
  /// Estimators used as outcome regressions; one TMLE each.
  FamilyConfig family;
  Fluctuation fluctuation = Fluctuation::Linear;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t truth_draws = 1000000;
  std::optional<double> true_ate;
};

AteExperimentConfig default_ate_config();

struct AteRow {
  std::size_t replication = 0;
  std::string estimator;
  double estimate = 0.0;
  double epsilon = 0.0;
  double score = 0.0;
};

struct AteSummary {
  std::string estimator;
  double mean = 0.0;
  double bias = 0.0;
  double bias_se = 0.0;
  /// Denominator R, so mse = bias^2 + variance exactly.
  double variance = 0.0;
  double mse = 0.0;
  double relative_mse = 1.0;
  std::size_t replications = 0;
};

struct AteReport {
  std::string scenario;
  double true_ate = 0.0;
  std::vector<AteRow> rows;
  std::vector<AteSummary> summary;
  std::vector<std::string> failures;
  double mean_zero_fraction = 0.0;
  double mean_outlier_fraction = 0.0;
  double max_abs_score = 0.0;

  [[nodiscard]] const AteSummary& find(const std::string& estimator) const;
  [[nodiscard]] Report to_report() const;
};

/// Outcome-model design: treatment X1 first, then X2..X5.
Matrix ate_design(const Matrix& covariates);

AteReport run_ate_experiment(const AteExperimentConfig& config);

struct OracleTrendConfig {
  OutlierRegime regime = OutlierRegime::Medium;
  CovariateSpec covariates;
  std::vector<std::size_t> sample_sizes{250, 1000, 4000};
  std::size_t replications = 50;
  std::size_t V = 5;
  LearnerRegistry learners;
  std::size_t mc_draws = 100000;
  /// Design size keying the cost tail rule. Fixed so that every sample size
  /// draws from the same distribution.
  std::size_t tail_design_n = 1000;
  /// Huber parameter of the risk; defaults to the upper quartile of a large pilot cost sample.
  std::optional<double> lambda;
  MetaSolveOptions meta;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

/// OLS, lasso, a pruned regression tree and a 50-tree forest: all cheap to
/// evaluate on a large Monte Carlo sample.
LearnerRegistry oracle_trend_library();

struct OracleTrendPoint {
  std::size_t n = 0;
  std::vector<OracleGap> gaps;
  double median_gap = 0.0;
  /// Median of the per-replication Monte Carlo standard errors.
  double median_gap_se = 0.0;
};

struct OracleTrendReport {
  double lambda = 0.0;
  std::vector<OracleTrendPoint> points;
  std::vector<std::string> failures;

  [[nodiscard]] Report to_report() const;
};

OracleTrendReport run_oracle_trend(const OracleTrendConfig& config);

struct LambdaStability {
  std::string estimator;
  std::vector<double> lambda_a;
  std::vector<double> lambda_b;
  double icc = 0.0;
  double accuracy = 0.0;
};

/// Splits the data in random halves `splits` times, selects lambda on each
/// half with a shared grid, and compares the paired selections.
std::vector<LambdaStability> lambda_stability(const Dataset& data, const FamilyConfig& family,
                                              std::size_t splits, std::uint64_t seed);

}  // namespace hubersl
