#include "hubersl/super_learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hubersl/parallel.hpp"
#include "hubersl/rng.hpp"

namespace hubersl {

namespace {

constexpr std::uint64_t kFullTag = 0x66756c6c;
constexpr std::uint64_t kFoldTag = 0x666f6c64;
constexpr std::uint64_t kLevelOneTag = 0x6c31;
constexpr std::uint64_t kInnerTag = 0x696e6e72;

struct SharedFits {
  std::vector<LearnerPtr> full;
  FitLog full_log;
  std::shared_ptr<const LevelOneMatrix> level_one;
  std::optional<NestedFits> nested;
};

SharedFits fit_shared(const Dataset& data, const LearnerRegistry& learners, std::size_t V, std::size_t D,
                      bool stratify, bool need_nested, std::uint64_t seed, std::size_t workers) {
  if (learners.empty()) throw ConfigError("learner registry is empty");
  check_finite_design(data.X, data.y);
  if (data.rows() < 2 * V) throw DataError("super learner needs n >= 2V observations");
  const std::size_t K = learners.size();

  SharedFits shared;
  shared.full.resize(K);
  std::vector<FitLog> logs(K);
  parallel_for(K, workers, [&](std::size_t k) {
    shared.full[k] = fit(learners[k], data.X, data.y, derive_seed(seed, {kFullTag, k}), &logs[k]);
  });
  for (auto& l : logs) shared.full_log.insert(shared.full_log.end(), l.begin(), l.end());

  const std::uint64_t fold_seed = derive_seed(seed, {kFoldTag});
  const FoldPlan plan = stratify ? make_zero_stratified_folds(data.y, V, fold_seed)
                                 : make_folds(data.rows(), V, fold_seed);
  LevelOneOptions lo;
  lo.workers = workers;
  shared.level_one = std::make_shared<const LevelOneMatrix>(
      build_level_one(data, learners, plan, derive_seed(seed, {kLevelOneTag}), lo));
  if (need_nested) {
    shared.nested = build_nested_fits(data, learners, plan, D, derive_seed(seed, {kInnerTag}), workers);
  }
  return shared;
}

LambdaGrid resolve_grid(const std::vector<double>& explicit_grid, const Vector& y, std::size_t J,
                        GridSpacing spacing, FitLog& log) {
  if (!explicit_grid.empty()) return LambdaGrid(explicit_grid);
  std::vector<std::string> warnings;
  LambdaGrid grid = default_lambda_grid(y, J, spacing, &warnings);
  for (auto& w : warnings) log.push_back({"", -1, w});
  return grid;
}

double pooled_mse(const Matrix& Z, const Vector& y, const Vector& alpha) {
  return (y - Z * alpha).squaredNorm() / static_cast<double>(y.size());
}

SuperLearnerModel assemble(const SharedFits& shared, const Dataset& data, std::uint64_t seed) {
  const Vector& y = data.y;
  SuperLearnerModel model;
  model.feature_names = data.feature_names;
  model.fits = shared.full;
  model.level_one = shared.level_one;
  model.seed = seed;
  model.n_features = data.cols();
  model.log = shared.full_log;
  model.log.insert(model.log.end(), shared.level_one->log.begin(), shared.level_one->log.end());
  const Matrix& Z = shared.level_one->Z;
  for (Eigen::Index k = 0; k < Z.cols(); ++k) {
    model.cv_mse.push_back((y - Z.col(k)).squaredNorm() / static_cast<double>(y.size()));
  }
  return model;
}

void finish(SuperLearnerModel& model, const Vector& y) {
  model.ensemble_cv_mse = pooled_mse(model.level_one->Z, y, model.weights.alpha());
}

}  // namespace

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::Standard: return "standard";
    case LossMode::HuberFixed: return "huber-fixed";
    case LossMode::HuberPartialCV: return "huber-partial-cv";
    case LossMode::HuberNestedCV: return "huber-nested-cv";
  }
  return "?";
}

LossMode loss_mode_from_string(const std::string& s) {
  for (LossMode m : {LossMode::Standard, LossMode::HuberFixed, LossMode::HuberPartialCV, LossMode::HuberNestedCV}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown loss mode '" + s + "'");
}

void validate(const SuperLearnerConfig& config) {
  if (config.learners.empty()) throw ConfigError("learner registry is empty");
  if (config.V < 2) throw ConfigError("V must be >= 2");
  validate(config.meta);
  if (config.loss_mode == LossMode::HuberFixed) {
    if (!std::isfinite(config.fixed_lambda) || config.fixed_lambda <= 0.0) {
      throw ConfigError("huber-fixed needs a finite positive lambda");
    }
  }
  if (config.loss_mode == LossMode::HuberPartialCV || config.loss_mode == LossMode::HuberNestedCV) {
    if (!config.lambda_grid.empty()) {
      try {
        LambdaGrid g(config.lambda_grid);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (config.grid_size < 2) {
      throw ConfigError("grid_size must be >= 2");
    }
  }
  if (config.loss_mode == LossMode::HuberNestedCV && config.D < 2) throw ConfigError("D must be >= 2");
}

std::vector<std::string> SuperLearnerModel::learner_names() const {
  std::vector<std::string> out;
  for (const auto& f : fits) out.push_back(f->spec().name);
  return out;
}

SuperLearnerModel fit_super_learner(const Dataset& data, const SuperLearnerConfig& config) {
  validate(config);
  const bool nested = config.loss_mode == LossMode::HuberNestedCV;
  FitLog grid_log;
  std::optional<LambdaGrid> grid;
  if (config.loss_mode == LossMode::HuberPartialCV || nested) {
    grid = resolve_grid(config.lambda_grid, data.y, config.grid_size, config.grid_spacing, grid_log);
  }
  const SharedFits shared = fit_shared(data, config.learners, config.V, config.D, config.stratify_zero_folds,
                                       nested && grid->size() > 1, config.seed, config.workers);
  SuperLearnerModel model = assemble(shared, data, config.seed);
  model.log.insert(model.log.end(), grid_log.begin(), grid_log.end());
  model.loss_mode = config.loss_mode;
  model.ensemble = config.ensemble;
  model.label = to_string(config.loss_mode) + "/" + to_string(config.ensemble);
  const LevelOneMatrix& L = *shared.level_one;
  LambdaSelectionOptions opts{config.ensemble, config.meta, config.workers};

  switch (config.loss_mode) {
    case LossMode::Standard:
      model.weights = meta_weights(L, data.y, SquaredLoss{}, config.ensemble, config.meta);
      break;
    case LossMode::HuberFixed:
      model.lambda = config.fixed_lambda;
      model.weights = meta_weights(L, data.y, huber(config.fixed_lambda), config.ensemble, config.meta);
      break;
    case LossMode::HuberPartialCV: {
      LambdaSelection sel = partial_cv_select(L, data.y, *grid, opts);
      model.weights = sel.weights[sel.chosen_index];
      model.lambda = sel.chosen_lambda;
      model.selection = std::move(sel);
      model.lambda_grid = grid->values();
      break;
    }
    case LossMode::HuberNestedCV: {
      static const NestedFits kNone;
      NestedSelection r = nested_cv_select(L, shared.nested ? *shared.nested : kNone, data.y, *grid, opts);
      model.weights = r.weights;
      model.lambda = r.selection.chosen_lambda;
      model.selection = std::move(r.selection);
      model.lambda_grid = grid->values();
      if (shared.nested) {
        for (const auto& inner : shared.nested->inner) model.log.insert(model.log.end(), inner.log.begin(), inner.log.end());
      }
      break;
    }
  }
  finish(model, data.y);
  return model;
}

Vector predict_super_learner(const SuperLearnerModel& model, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != model.n_features) {
    throw DataError("expected " + std::to_string(model.n_features) + " feature columns, got " +
                    std::to_string(X.cols()));
  }
  if (model.fits.size() != model.weights.size()) throw std::logic_error("model weights do not match its learners");
  Vector out = Vector::Zero(X.rows());
  for (std::size_t k = 0; k < model.fits.size(); ++k) {
    if (model.weights[k] == 0.0) continue;
    out += model.weights[k] * model.fits[k]->predict(X);
  }
  return out;
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::StandardDiscrete: return "standard-discrete";
    case Estimator::StandardSL: return "standard-sl";
    case Estimator::PartialDiscrete: return "partial-cv-huber-discrete";
    case Estimator::PartialSL: return "partial-cv-huber-sl";
    case Estimator::NestedDiscrete: return "nested-cv-huber-discrete";
    case Estimator::NestedSL: return "nested-cv-huber-sl";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& s) {
  for (Estimator e : all_estimators()) {
    if (to_string(e) == s) return e;
  }
  throw ConfigError("unknown estimator '" + s + "'");
}

const std::vector<Estimator>& all_estimators() {
  static const std::vector<Estimator> all{Estimator::StandardDiscrete, Estimator::StandardSL,
                                          Estimator::PartialDiscrete,  Estimator::PartialSL,
                                          Estimator::NestedDiscrete,   Estimator::NestedSL};
  return all;
}

std::vector<SuperLearnerModel> fit_estimator_family(const Dataset& data, const FamilyConfig& config) {
  if (config.estimators.empty()) throw ConfigError("no estimators requested");
  validate(config.meta);
  if (config.V < 2 || config.D < 2) throw ConfigError("V and D must be >= 2");
  auto is_nested = [](Estimator e) { return e == Estimator::NestedDiscrete || e == Estimator::NestedSL; };
  auto is_huber = [](Estimator e) { return e != Estimator::StandardDiscrete && e != Estimator::StandardSL; };
  const bool any_huber = std::any_of(config.estimators.begin(), config.estimators.end(), is_huber);
  const bool any_nested = std::any_of(config.estimators.begin(), config.estimators.end(), is_nested);

  FitLog grid_log;
  std::optional<LambdaGrid> grid;
  if (any_huber) grid = resolve_grid(config.lambda_grid, data.y, config.grid_size, config.grid_spacing, grid_log);
  const SharedFits shared = fit_shared(data, config.learners, config.V, config.D, config.stratify_zero_folds,
                                       any_nested && grid->size() > 1, config.seed, config.workers);
  const LevelOneMatrix& L = *shared.level_one;
  static const NestedFits kNone;

  std::vector<SuperLearnerModel> out;
  for (Estimator e : config.estimators) {
    SuperLearnerModel model = assemble(shared, data, config.seed);
    model.log.insert(model.log.end(), grid_log.begin(), grid_log.end());
    model.label = to_string(e);
    const bool discrete = e == Estimator::StandardDiscrete || e == Estimator::PartialDiscrete ||
                          e == Estimator::NestedDiscrete;
    model.ensemble = discrete ? EnsembleMode::Discrete : EnsembleMode::Convex;
    LambdaSelectionOptions opts{model.ensemble, config.meta, config.workers};
    if (!is_huber(e)) {
      model.loss_mode = LossMode::Standard;
      model.weights = meta_weights(L, data.y, SquaredLoss{}, model.ensemble, config.meta);
    } else if (!is_nested(e)) {
      model.loss_mode = LossMode::HuberPartialCV;
      LambdaSelection sel = partial_cv_select(L, data.y, *grid, opts);
      model.weights = sel.weights[sel.chosen_index];
      model.lambda = sel.chosen_lambda;
      model.selection = std::move(sel);
      model.lambda_grid = grid->values();
    } else {
      model.loss_mode = LossMode::HuberNestedCV;
      NestedSelection r = nested_cv_select(L, shared.nested ? *shared.nested : kNone, data.y, *grid, opts);
      model.weights = r.weights;
      model.lambda = r.selection.chosen_lambda;
      model.selection = std::move(r.selection);
      model.lambda_grid = grid->values();
    }
    finish(model, data.y);
    out.push_back(std::move(model));
  }
  return out;
}

namespace {

/// Rows v*M + i hold Q_{k,v}(X_i); the outcome is repeated per fold.
std::pair<Matrix, Vector> stack_oracle(const FoldFits& fold_fits, const RiskOracle& oracle) {
  if (oracle.X.rows() == 0 || oracle.y.size() != oracle.X.rows()) {
    throw std::invalid_argument("risk oracle unavailable: no Monte Carlo sample");
  }
  if (fold_fits.empty() || fold_fits.front().empty()) throw std::invalid_argument("no fold fits for the oracle");
  const Eigen::Index M = oracle.X.rows();
  const std::size_t V = fold_fits.size();
  const std::size_t K = fold_fits.front().size();
  Matrix Z(static_cast<Eigen::Index>(V) * M, static_cast<Eigen::Index>(K));
  Vector y(static_cast<Eigen::Index>(V) * M);
  for (std::size_t v = 0; v < V; ++v) {
    if (fold_fits[v].size() != K) throw std::invalid_argument("ragged fold fits");
    const Eigen::Index offset = static_cast<Eigen::Index>(v) * M;
    for (std::size_t k = 0; k < K; ++k) {
      Z.block(offset, static_cast<Eigen::Index>(k), M, 1) = fold_fits[v][k]->predict(oracle.X);
    }
    y.segment(offset, M) = oracle.y;
  }
  return {std::move(Z), std::move(y)};
}

}  // namespace

SimplexWeights oracle_weights(const FoldFits& fold_fits, const RiskOracle& oracle, const LossKind& loss,
                              const MetaSolveOptions& meta) {
  const auto [Z, y] = stack_oracle(fold_fits, oracle);
  return solve_weights(Z, y, loss, meta);
}

OracleGap compare_to_oracle(const FoldFits& fold_fits, const RiskOracle& oracle, const LossKind& loss,
                            const SimplexWeights& empirical, const MetaSolveOptions& meta) {
  const auto [Z, y] = stack_oracle(fold_fits, oracle);
  if (static_cast<Eigen::Index>(empirical.size()) != Z.cols()) throw std::invalid_argument("weight length mismatch");
  OracleGap out;
  out.oracle = solve_weights(Z, y, loss, meta);
  const Eigen::Index M = oracle.X.rows();
  const auto V = static_cast<Eigen::Index>(fold_fits.size());
  const Vector r_hat = y - Z * empirical.alpha();
  const Vector r_tilde = y - Z * out.oracle.alpha();
  Vector diff = Vector::Zero(M);
  double sum_hat = 0.0;
  double sum_tilde = 0.0;
  for (Eigen::Index v = 0; v < V; ++v) {
    for (Eigen::Index i = 0; i < M; ++i) {
      const double a = loss_value(loss, r_hat[v * M + i]);
      const double b = loss_value(loss, r_tilde[v * M + i]);
      sum_hat += a;
      sum_tilde += b;
      diff[i] += a - b;
    }
  }
  const double m = static_cast<double>(M);
  out.risk_empirical = sum_hat / m;
  out.risk_oracle = sum_tilde / m;
  out.gap = diff.mean();
  const double var = M > 1 ? (diff.array() - out.gap).square().sum() / (m - 1.0) : 0.0;
  out.gap_se = std::sqrt(var / m);
  out.draws = static_cast<std::size_t>(M);
  return out;
}

}  // namespace hubersl
