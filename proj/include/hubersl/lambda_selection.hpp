#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hubersl/cross_validation.hpp"
#include "hubersl/meta_optimizer.hpp"

namespace hubersl {

/// Strictly increasing positive robustification parameters.
class LambdaGrid {
 public:
  explicit LambdaGrid(std::vector<double> values);

  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t j) const { return values_[j]; }

 private:
  std::vector<double> values_;
};

enum class GridSpacing { Log, Linear };

std::vector<double> spaced_values(double lo, double hi, std::size_t J, GridSpacing spacing);

/// J points from 0.1 to max|y|. When max|y| <= 0.1 the grid collapses to {0.1}
/// and a message is appended to `warnings`.
LambdaGrid default_lambda_grid(const Vector& y, std::size_t J, GridSpacing spacing = GridSpacing::Log,
                               std::vector<std::string>* warnings = nullptr);

/// Fixed 37-point grid from 0.1 to 1e8, restricted to values not above max|y|
/// (always keeps the first point).
LambdaGrid global_lambda_grid(const Vector& y, GridSpacing spacing = GridSpacing::Log);

enum class EnsembleMode { Convex, Discrete };

std::string to_string(EnsembleMode mode);
EnsembleMode ensemble_mode_from_string(const std::string& s);

struct LambdaSelectionOptions {
  EnsembleMode ensemble = EnsembleMode::Convex;
  MetaSolveOptions meta;
  std::size_t workers = 1;
};

struct LambdaSelection {
  std::size_t chosen_index = 0;
  double chosen_lambda = 0.0;
  /// Cross-validated squared error for each grid point.
  std::vector<double> cv_mse;
  /// Partial mode: weights per grid point. Nested mode: empty.
  std::vector<SimplexWeights> weights;
  /// Nested mode: fold_weights[v][j] from the inner super learner on outer training sample v.
  std::vector<std::vector<SimplexWeights>> fold_weights;
};

/// Meta step for one loss under the requested ensemble mode (fold-balanced risk).
SimplexWeights meta_weights(const LevelOneMatrix& level_one, const Vector& y, const LossKind& loss,
                            EnsembleMode mode, const MetaSolveOptions& meta);

/// Index of the smallest entry, lowest index on ties.
std::size_t argmin_first(const std::vector<double>& values);

/// Weights fitted on the full level-one matrix for every grid point, scored by
/// the pooled squared error of the same level-one predictions.
LambdaSelection partial_cv_select(const LevelOneMatrix& level_one, const Vector& y,
                                  const LambdaGrid& grid, const LambdaSelectionOptions& options = {});

/// Inner level-one matrices, one per outer training sample. Base fits depend
/// only on the data, so they are shared by every grid point and both ensemble modes.
struct NestedFits {
  std::vector<LevelOneMatrix> inner;
  std::vector<Vector> inner_y;
};

NestedFits build_nested_fits(const Dataset& data, const LearnerRegistry& learners,
                             const FoldPlan& outer_plan, std::size_t D, std::uint64_t seed,
                             std::size_t workers = 1);

struct NestedSelection {
  LambdaSelection selection;
  SimplexWeights weights;
};

/// Scores each grid point by the pooled outer-validation squared error of the
/// inner super learners, then re-solves on the outer level-one matrix.
NestedSelection nested_cv_select(const LevelOneMatrix& outer, const NestedFits& fits, const Vector& y,
                                 const LambdaGrid& grid, const LambdaSelectionOptions& options = {});

struct NestedRun {
  NestedSelection result;
  LevelOneMatrix outer;
};

/// Full procedure: V outer folds, D inner folds. Fits V * (D + 1) * K base
/// learners when the grid has more than one point, V * K otherwise.
NestedRun nested_cv_select(const Dataset& data, const LearnerRegistry& learners, const LambdaGrid& grid,
                           std::size_t V, std::size_t D, std::uint64_t seed,
                           const LambdaSelectionOptions& options = {});

}  // namespace hubersl
