#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hubersl/cross_validation.hpp"
#include "hubersl/lambda_selection.hpp"
#include "hubersl/learners.hpp"
#include "hubersl/meta_optimizer.hpp"

namespace hubersl {

enum class LossMode { Standard, HuberFixed, HuberPartialCV, HuberNestedCV };

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& s);

struct SuperLearnerConfig {
  LearnerRegistry learners;
  std::size_t V = 10;
  LossMode loss_mode = LossMode::Standard;
  EnsembleMode ensemble = EnsembleMode::Convex;
  /// Used by HuberFixed.
  double fixed_lambda = 0.0;
  /// Candidate lambdas for the CV modes; empty means default_lambda_grid(y, grid_size).
  std::vector<double> lambda_grid;
  std::size_t grid_size = 29;
  GridSpacing grid_spacing = GridSpacing::Log;
  /// Inner folds for nested CV.
  std::size_t D = 10;
  bool stratify_zero_folds = false;
  std::uint64_t seed = 0;
  MetaSolveOptions meta;
  std::size_t workers = 1;
};

/// Throws ConfigError on inconsistent settings.
void validate(const SuperLearnerConfig& config);

struct SuperLearnerModel {
  std::string label;
  std::vector<LearnerPtr> fits;
  SimplexWeights weights = SimplexWeights::uniform(1);
  LossMode loss_mode = LossMode::Standard;
  EnsembleMode ensemble = EnsembleMode::Convex;
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  std::optional<LambdaSelection> selection;
  /// Cross-validated MSE of each base learner and of the ensemble.
  std::vector<double> cv_mse;
  double ensemble_cv_mse = 0.0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  FitLog log;
  /// Level-one matrix used for the weights; not persisted.
  std::shared_ptr<const LevelOneMatrix> level_one;

  [[nodiscard]] std::vector<std::string> learner_names() const;
};

SuperLearnerModel fit_super_learner(const Dataset& data, const SuperLearnerConfig& config);

/// sum_k alpha_k Q_k(X). Learners with zero weight are not evaluated.
Vector predict_super_learner(const SuperLearnerModel& model, const Matrix& X);

/// The six estimators compared in the prediction experiments.
enum class Estimator { StandardDiscrete, StandardSL, PartialDiscrete, PartialSL, NestedDiscrete, NestedSL };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);
const std::vector<Estimator>& all_estimators();

struct FamilyConfig {
  LearnerRegistry learners;
  std::size_t V = 10;
  std::size_t D = 10;
  std::vector<double> lambda_grid;
  std::size_t grid_size = 29;
  GridSpacing grid_spacing = GridSpacing::Log;
  bool stratify_zero_folds = false;
  std::uint64_t seed = 0;
  MetaSolveOptions meta;
  std::size_t workers = 1;
  std::vector<Estimator> estimators = all_estimators();
};

/// Fits the requested estimators on shared base fits: K full-data fits, one
/// outer level-one matrix, and (only if a nested estimator is requested) the
/// inner level-one matrices. Result order follows config.estimators.
std::vector<SuperLearnerModel> fit_estimator_family(const Dataset& data, const FamilyConfig& config);

/// Large fresh sample from a known data-generating process.
struct RiskOracle {
  Matrix X;
  Vector y;
};

/// Per-fold fits Q_{k,v}, indexed [v][k].
using FoldFits = std::vector<std::vector<LearnerPtr>>;

/// Minimizes the Monte Carlo estimate of sum_v R(sum_k alpha_k Q_{k,v}) over the simplex.
SimplexWeights oracle_weights(const FoldFits& fold_fits, const RiskOracle& oracle, const LossKind& loss,
                              const MetaSolveOptions& meta = {});

struct OracleGap {
  SimplexWeights oracle = SimplexWeights::uniform(1);
  double risk_empirical = 0.0;  // sum_v R(alpha_hat)
  double risk_oracle = 0.0;     // sum_v R(alpha_tilde)
  double gap = 0.0;
  /// Standard error of `gap` from the paired per-draw differences.
  double gap_se = 0.0;
  std::size_t draws = 0;
};

OracleGap compare_to_oracle(const FoldFits& fold_fits, const RiskOracle& oracle, const LossKind& loss,
                            const SimplexWeights& empirical, const MetaSolveOptions& meta = {});

/// Versioned JSON document; reload-and-predict is bit-exact.
nlohmann::json model_to_json(const SuperLearnerModel& model);
SuperLearnerModel model_from_json(const nlohmann::json& j);

}  // namespace hubersl
