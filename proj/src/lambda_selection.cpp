#include "hubersl/lambda_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hubersl/parallel.hpp"
#include "hubersl/rng.hpp"

namespace hubersl {

namespace {
constexpr std::uint64_t kNestedTag = 0x6e65737465640001ULL;
}

LambdaGrid::LambdaGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("lambda grid is empty");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j]) || values_[j] <= 0.0) {
      throw std::invalid_argument("lambda grid values must be finite and positive");
    }
    if (j > 0 && !(values_[j] > values_[j - 1])) {
      throw std::invalid_argument("lambda grid must be strictly increasing");
    }
  }
}

std::vector<double> spaced_values(double lo, double hi, std::size_t J, GridSpacing spacing) {
  if (J == 0) throw std::invalid_argument("grid needs at least one point");
  if (J == 1) return {lo};
  std::vector<double> out(J);
  const double a = spacing == GridSpacing::Log ? std::log(lo) : lo;
  const double b = spacing == GridSpacing::Log ? std::log(hi) : hi;
  for (std::size_t j = 0; j < J; ++j) {
    const double t = a + (b - a) * static_cast<double>(j) / static_cast<double>(J - 1);
    out[j] = spacing == GridSpacing::Log ? std::exp(t) : t;
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

LambdaGrid default_lambda_grid(const Vector& y, std::size_t J, GridSpacing spacing,
                               std::vector<std::string>* warnings) {
  if (J < 2) throw ConfigError("default lambda grid needs J >= 2");
  if (y.size() == 0 || !y.allFinite()) throw DataError("lambda grid needs a finite, non-empty outcome");
  constexpr double kLow = 0.1;
  const double top = y.cwiseAbs().maxCoeff();
  if (top <= kLow) {
    if (warnings) warnings->push_back("max|y| <= 0.1; lambda grid collapsed to {0.1}");
    return LambdaGrid({kLow});
  }
  return LambdaGrid(spaced_values(kLow, top, J, spacing));
}

LambdaGrid global_lambda_grid(const Vector& y, GridSpacing spacing) {
  const double top = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
  std::vector<double> kept;
  for (double v : spaced_values(0.1, 1e8, 37, spacing)) {
    if (kept.empty() || v <= top) kept.push_back(v);
  }
  return LambdaGrid(std::move(kept));
}

std::string to_string(EnsembleMode mode) { return mode == EnsembleMode::Convex ? "convex" : "discrete"; }

EnsembleMode ensemble_mode_from_string(const std::string& s) {
  if (s == "convex") return EnsembleMode::Convex;
  if (s == "discrete") return EnsembleMode::Discrete;
  throw ConfigError("unknown ensemble mode '" + s + "'");
}

SimplexWeights meta_weights(const LevelOneMatrix& level_one, const Vector& y, const LossKind& loss,
                            EnsembleMode mode, const MetaSolveOptions& meta) {
  return mode == EnsembleMode::Convex ? solve_weights(level_one, y, loss, meta)
                                      : discrete_select(level_one, y, loss);
}

std::size_t argmin_first(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] < values[best]) best = j;
  }
  return best;
}

LambdaSelection partial_cv_select(const LevelOneMatrix& level_one, const Vector& y,
                                  const LambdaGrid& grid, const LambdaSelectionOptions& options) {
  const std::size_t J = grid.size();
  std::vector<std::optional<SimplexWeights>> slots(J);
  std::vector<double> mse(J);
  parallel_for(J, options.workers, [&](std::size_t j) {
    slots[j] = meta_weights(level_one, y, huber(grid[j]), options.ensemble, options.meta);
    mse[j] = (y - level_one.Z * slots[j]->alpha()).squaredNorm() / static_cast<double>(y.size());
  });
  LambdaSelection out;
  out.cv_mse = mse;
  for (auto& s : slots) out.weights.push_back(*s);
  out.chosen_index = argmin_first(mse);
  out.chosen_lambda = grid[out.chosen_index];
  return out;
}

NestedFits build_nested_fits(const Dataset& data, const LearnerRegistry& learners,
                             const FoldPlan& outer_plan, std::size_t D, std::uint64_t seed,
                             std::size_t workers) {
  if (D < 2) throw ConfigError("inner fold count D must be >= 2");
  NestedFits fits;
  for (std::size_t v = 0; v < outer_plan.V; ++v) {
    const auto train = outer_plan.training_indices(v);
    const std::size_t largest_block = (train.size() + D - 1) / D;
    if (train.size() < D || train.size() - largest_block < 2) {
      throw DataError("outer training sample too small for " + std::to_string(D) + " inner folds");
    }
    Dataset inner_data;
    inner_data.X = select_rows(data.X, train);
    inner_data.y = select_rows(data.y, train);
    inner_data.feature_names = data.feature_names;
    const FoldPlan inner_plan = make_folds(train.size(), D, derive_seed(seed, {kNestedTag, v, 0}));
    LevelOneOptions lo;
    lo.workers = workers;
    fits.inner.push_back(build_level_one(inner_data, learners, inner_plan, derive_seed(seed, {kNestedTag, v, 1}), lo));
    for (auto& e : fits.inner.back().log) e.message = "outer fold " + std::to_string(v) + ": " + e.message;
    fits.inner_y.push_back(std::move(inner_data.y));
  }
  return fits;
}

NestedSelection nested_cv_select(const LevelOneMatrix& outer, const NestedFits& fits, const Vector& y,
                                 const LambdaGrid& grid, const LambdaSelectionOptions& options) {
  const std::size_t J = grid.size();
  const std::size_t V = outer.plan.V;
  LambdaSelection sel;
  if (J > 1) {
    if (fits.inner.size() != V) throw std::invalid_argument("nested fits do not match the outer plan");
    std::vector<std::optional<SimplexWeights>> slots(V * J);
    parallel_for(V * J, options.workers, [&](std::size_t task) {
      const std::size_t v = task / J;
      const std::size_t j = task % J;
      slots[task] = meta_weights(fits.inner[v], fits.inner_y[v], huber(grid[j]), options.ensemble, options.meta);
    });
    std::vector<double> sse(J, 0.0);
    sel.fold_weights.resize(V);
    for (std::size_t v = 0; v < V; ++v) {
      const auto idx = outer.plan.validation_indices(v);
      const Matrix Zv = select_rows(outer.Z, idx);
      const Vector yv = select_rows(y, idx);
      for (std::size_t j = 0; j < J; ++j) {
        const SimplexWeights& w = *slots[v * J + j];
        sse[j] += (yv - Zv * w.alpha()).squaredNorm();
        sel.fold_weights[v].push_back(w);
      }
    }
    for (double& s : sse) s /= static_cast<double>(y.size());
    sel.cv_mse = std::move(sse);
    sel.chosen_index = argmin_first(sel.cv_mse);
  } else {
    sel.cv_mse.clear();  // nothing to score with a single candidate
    sel.chosen_index = 0;
  }
  sel.chosen_lambda = grid[sel.chosen_index];
  SimplexWeights final_weights = meta_weights(outer, y, huber(sel.chosen_lambda), options.ensemble, options.meta);
  return {std::move(sel), std::move(final_weights)};
}

NestedRun nested_cv_select(const Dataset& data, const LearnerRegistry& learners, const LambdaGrid& grid,
                           std::size_t V, std::size_t D, std::uint64_t seed,
                           const LambdaSelectionOptions& options) {
  const FoldPlan plan = make_folds(static_cast<std::size_t>(data.rows()), V, derive_seed(seed, {kNestedTag, 0xf0}));
  LevelOneOptions lo;
  lo.workers = options.workers;
  LevelOneMatrix outer = build_level_one(data, learners, plan, derive_seed(seed, {kNestedTag, 0xf1}), lo);
  NestedFits fits;
  if (grid.size() > 1) fits = build_nested_fits(data, learners, plan, D, seed, options.workers);
  NestedSelection result = nested_cv_select(outer, fits, data.y, grid, options);
  return {std::move(result), std::move(outer)};
}

}  // namespace hubersl
