#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hubersl/learners.hpp"
#include "hubersl/types.hpp"

namespace hubersl {

/// Assignment of n observations to V validation blocks.
/// Blocks are mutually exclusive and exhaustive and differ in size by at most one.
struct FoldPlan {
  std::size_t n = 0;
  std::size_t V = 0;
  std::vector<std::size_t> assignment;

  [[nodiscard]] std::vector<std::size_t> validation_indices(std::size_t v) const;
  [[nodiscard]] std::vector<std::size_t> training_indices(std::size_t v) const;
  [[nodiscard]] std::vector<std::size_t> fold_sizes() const;
};

/// Uniform random permutation, then round-robin block assignment.
/// Throws std::invalid_argument unless 2 <= V <= n.
FoldPlan make_folds(std::size_t n, std::size_t V, std::uint64_t seed);

/// As make_folds, but zeros and positives are dealt out separately so each
/// fold gets its share of the point mass at zero. Fold sizes may then differ
/// by up to two.
FoldPlan make_zero_stratified_folds(const Vector& y, std::size_t V, std::uint64_t seed);

/// Throws std::invalid_argument if the plan is malformed.
void check_fold_plan(const FoldPlan& plan);

/// Per-observation weights n / (V |I_v|). A weighted mean with these weights
/// equals the average over folds of per-fold means; all ones for equal folds.
Vector fold_balance_weights(const FoldPlan& plan);

/// Cross-validated predictions: Z(i, k) comes from learner k trained
/// without fold(i). Column order follows the registry.
struct LevelOneMatrix {
  Matrix Z;
  FoldPlan plan;
  std::vector<std::string> learner_names;
  FitLog log;
  /// fold_fits[v][k]; populated only when requested.
  std::vector<std::vector<LearnerPtr>> fold_fits;
};

struct LevelOneOptions {
  bool keep_fold_fits = false;
  std::size_t workers = 1;
};

/// A learner that throws on some split is replaced by the training-mean
/// predictor for that split; the event is recorded in the log.
LevelOneMatrix build_level_one(const Dataset& data, const LearnerRegistry& learners,
                               const FoldPlan& plan, std::uint64_t seed,
                               const LevelOneOptions& options = {});

}  // namespace hubersl
