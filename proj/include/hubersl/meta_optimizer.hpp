#pragma once

#include <optional>
#include <vector>

#include "hubersl/cross_validation.hpp"
#include "hubersl/losses.hpp"
#include "hubersl/types.hpp"

namespace hubersl {

/// Ensemble weights on the K-simplex: nonnegative, summing to one within 1e-10.
class SimplexWeights {
 public:
  explicit SimplexWeights(Vector alpha);

  static SimplexWeights uniform(std::size_t K);
  static SimplexWeights vertex(std::size_t K, std::size_t k);

  [[nodiscard]] const Vector& alpha() const { return alpha_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(alpha_.size()); }
  [[nodiscard]] double operator[](std::size_t k) const { return alpha_[static_cast<Eigen::Index>(k)]; }
  [[nodiscard]] bool is_vertex() const;

 private:
  Vector alpha_;
};

struct MetaSolveOptions {
  int max_iterations = 5000;
  double relative_objective_tolerance = 1e-9;
  /// Starting point; uniform weights when empty.
  std::optional<Vector> initial_point;
  bool record_trace = false;
};

void validate(const MetaSolveOptions& options);

struct MetaSolveResult {
  SimplexWeights weights;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after each accepted iterate (index 0 is the start), when requested.
  std::vector<double> trace;
};

/// Euclidean projection of v onto the probability simplex.
SimplexWeights project_to_simplex(const Vector& v);

/// (1/n) sum_i w_i loss(y_i - Z_i alpha); w defaults to all ones.
double meta_objective(const Matrix& Z, const Vector& y, const LossKind& loss, const Vector& alpha,
                      const Vector* observation_weights = nullptr);

/// Projected gradient descent with Armijo backtracking over the simplex.
/// The problem is rescaled internally by max(|y|, |Z|); the minimizer is
/// unchanged because both losses are jointly homogeneous in (y, Z, lambda).
MetaSolveResult solve_weights_detailed(const Matrix& Z, const Vector& y, const LossKind& loss,
                                       const MetaSolveOptions& options = {},
                                       const Vector* observation_weights = nullptr);

SimplexWeights solve_weights(const Matrix& Z, const Vector& y, const LossKind& loss,
                             const MetaSolveOptions& options = {});

/// Cross-validated risk summed over folds as per-fold means (fold-balanced).
SimplexWeights solve_weights(const LevelOneMatrix& level_one, const Vector& y,
                             const LossKind& loss, const MetaSolveOptions& options = {});

/// One-hot weights on the column with the smallest empirical risk; ties go
/// to the lowest column index.
SimplexWeights discrete_select(const Matrix& Z, const Vector& y, const LossKind& loss,
                               const Vector* observation_weights = nullptr);
SimplexWeights discrete_select(const LevelOneMatrix& level_one, const Vector& y,
                               const LossKind& loss);

/// Grid-snap mode: exhaustive minimization over the lattice
/// {alpha : alpha_k = m_k / resolution}. Cost grows as resolution^(K-1).
MetaSolveResult solve_weights_on_lattice(const Matrix& Z, const Vector& y, const LossKind& loss,
                                         int resolution,
                                         const Vector* observation_weights = nullptr);

}  // namespace hubersl
