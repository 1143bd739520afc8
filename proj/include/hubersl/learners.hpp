#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "hubersl/types.hpp"

namespace hubersl {

enum class LearnerKind {
  Mean,
  OLS,
  Ridge,
  Lasso,
  KNN,
  RegressionTree,
  RandomForest,
  LogisticGLM,
  TwoStage,
};

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

/// A named fit procedure plus its hyperparameters.
///
/// Hyperparameters by kind (all optional):
///   Ridge          penalty (>= 0, default 1)
///   Lasso          penalty (>= 0; absent selects it by internal 5-fold CV),
///                  cv_folds, grid_size, tolerance, max_sweeps
///   KNN            k (>= 1, default 10), standardize (0/1, default 1)
///   RegressionTree max_depth (>= 1, absent = unlimited), min_leaf (default 5)
///   RandomForest   trees (default 200), mtry (default ceil(p/3)),
///                  min_leaf (default 5), max_depth
///   LogisticGLM    ridge (default 1e-6), max_iterations (50), tolerance (1e-8)
/// TwoStage carries its classifier and regressor in `stages`.
struct LearnerSpec {
  std::string name;
  LearnerKind kind = LearnerKind::Mean;
  std::map<std::string, double> hyperparameters;
  std::vector<LearnerSpec> stages;

  [[nodiscard]] double param(const std::string& key, double fallback) const;
  [[nodiscard]] bool has(const std::string& key) const { return hyperparameters.contains(key); }
};

LearnerSpec make_spec(std::string name, LearnerKind kind,
                      std::map<std::string, double> hyperparameters = {});
LearnerSpec make_two_stage_spec(std::string name, LearnerSpec classifier, LearnerSpec regressor);

/// Throws ConfigError when hyperparameters are unknown or out of range for the kind.
void validate(const LearnerSpec& spec);

nlohmann::json spec_to_json(const LearnerSpec& spec);
LearnerSpec spec_from_json(const nlohmann::json& j);

/// Ordered, validated collection of learner specs with unique names.
class LearnerRegistry {
 public:
  LearnerRegistry() = default;
  explicit LearnerRegistry(std::vector<LearnerSpec> specs);

  void add(LearnerSpec spec);
  [[nodiscard]] std::size_t size() const { return specs_.size(); }
  [[nodiscard]] bool empty() const { return specs_.empty(); }
  [[nodiscard]] const LearnerSpec& operator[](std::size_t k) const { return specs_[k]; }
  [[nodiscard]] const std::vector<LearnerSpec>& specs() const { return specs_; }
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::vector<LearnerSpec> specs_;
};

/// Something noteworthy that happened during a fit (fallbacks, degenerate paths).
struct FitEvent {
  std::string learner;
  int fold = -1;  // -1 for full-data fits
  std::string message;
};
using FitLog = std::vector<FitEvent>;

/// Predictions are clamped into [lo, hi]; this enforces bounded learners.
struct ClampRange {
  double lo = -1.0;
  double hi = 1.0;
};

/// Default clamp: [min(y) - range(y), max(y) + range(y)].
ClampRange default_clamp(const Vector& y);

class FittedLearner {
 public:
  virtual ~FittedLearner() = default;

  [[nodiscard]] const LearnerSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t n_features() const { return n_features_; }
  [[nodiscard]] ClampRange clamp() const { return clamp_; }

  /// Finite predictions clamped to clamp(). Throws DataError on a column mismatch.
  [[nodiscard]] Vector predict(const Matrix& X) const;

  [[nodiscard]] nlohmann::json to_json() const;

 protected:
  FittedLearner(LearnerSpec spec, std::size_t n_features, ClampRange clamp);

  virtual void predict_raw(const Matrix& X, Vector& out) const = 0;
  [[nodiscard]] virtual nlohmann::json state_json() const = 0;

 private:
  LearnerSpec spec_;
  std::size_t n_features_;
  ClampRange clamp_;
};

using LearnerPtr = std::shared_ptr<const FittedLearner>;

/// Fits `spec` on (X, y). Deterministic given seed.
/// OLS on a singular design falls back to ridge(1e-8) and records it in `log`.
LearnerPtr fit(const LearnerSpec& spec, const Matrix& X, const Vector& y, std::uint64_t seed,
               FitLog* log = nullptr);

/// Zero-inflated composite: P(Y > 0 | x) from the classifier times E[Y | Y > 0, x]
/// from the regressor fitted on the positive subsample.
LearnerPtr fit_two_stage(const LearnerSpec& classifier, const LearnerSpec& regressor,
                         const Matrix& X, const Vector& y, std::uint64_t seed,
                         FitLog* log = nullptr);

inline Vector predict(const FittedLearner& model, const Matrix& X) { return model.predict(X); }

/// Rebuilds a fitted learner from FittedLearner::to_json output.
LearnerPtr learner_from_json(const nlohmann::json& j);

/// Number of top-level fit()/fit_two_stage() calls since the last reset
/// (sub-fits inside composites and forests are not counted).
std::uint64_t fit_count();
void reset_fit_count();

}  // namespace hubersl
