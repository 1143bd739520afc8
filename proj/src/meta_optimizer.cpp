#include "hubersl/meta_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hubersl {

SimplexWeights::SimplexWeights(Vector alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() == 0) throw std::invalid_argument("simplex weights need K >= 1");
  if (!alpha_.allFinite() || (alpha_.array() < 0.0).any()) {
    throw std::invalid_argument("simplex weights must be finite and nonnegative");
  }
  if (std::abs(alpha_.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("simplex weights must sum to one");
  }
}

SimplexWeights SimplexWeights::uniform(std::size_t K) {
  return SimplexWeights(Vector::Constant(static_cast<Eigen::Index>(K), 1.0 / static_cast<double>(K)));
}

SimplexWeights SimplexWeights::vertex(std::size_t K, std::size_t k) {
  Vector a = Vector::Zero(static_cast<Eigen::Index>(K));
  a[static_cast<Eigen::Index>(k)] = 1.0;
  return SimplexWeights(std::move(a));
}

bool SimplexWeights::is_vertex() const {
  return (alpha_.array() == 1.0).count() == 1 && (alpha_.array() == 0.0).count() == alpha_.size() - 1;
}

void validate(const MetaSolveOptions& options) {
  if (options.max_iterations < 1) throw ConfigError("meta solver needs at least one iteration");
  if (!(options.relative_objective_tolerance > 0.0)) {
    throw ConfigError("meta solver tolerance must be positive");
  }
}

SimplexWeights project_to_simplex(const Vector& v) {
  const Eigen::Index K = v.size();
  if (K == 0) throw std::invalid_argument("cannot project an empty vector");
  if (!v.allFinite()) throw std::invalid_argument("cannot project a non-finite vector");
  std::vector<double> u(v.data(), v.data() + K);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < K; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  Vector alpha = (v.array() - theta).cwiseMax(0.0);
  const double total = alpha.sum();
  if (total > 0.0) alpha /= total;
  return SimplexWeights(std::move(alpha));
}

namespace {

void check_problem(const Matrix& Z, const Vector& y, const Vector* w) {
  if (Z.cols() == 0) throw std::invalid_argument("level-one matrix has no columns");
  if (Z.rows() != y.size()) throw std::invalid_argument("level-one matrix and outcome disagree in length");
  if (Z.rows() == 0) throw std::invalid_argument("level-one matrix is empty");
  if (!Z.allFinite()) throw std::invalid_argument("level-one matrix has non-finite entries");
  if (!y.allFinite()) throw std::invalid_argument("outcome has non-finite entries");
  if (w != nullptr && w->size() != y.size()) throw std::invalid_argument("observation weights length mismatch");
}

LossKind rescaled(const LossKind& loss, double scale) {
  if (const auto* h = std::get_if<HuberLoss>(&loss)) return huber(h->param.lambda() / scale);
  return SquaredLoss{};
}

struct Problem {
  const Matrix& Z;
  const Vector& y;
  const LossKind& loss;
  const Vector* w;

  double objective(const Vector& alpha) const { return meta_objective(Z, y, loss, alpha, w); }

  Vector gradient(const Vector& alpha) const {
    const Vector r = y - Z * alpha;
    Vector d(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      d[i] = loss_derivative(loss, r[i]) * (w ? (*w)[i] : 1.0);
    }
    return -(Z.transpose() * d) / static_cast<double>(r.size());
  }
};

}  // namespace

double meta_objective(const Matrix& Z, const Vector& y, const LossKind& loss, const Vector& alpha,
                      const Vector* observation_weights) {
  const Vector fitted = Z * alpha;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double l = loss_value(loss, y[i] - fitted[i]);
    total += observation_weights ? (*observation_weights)[i] * l : l;
  }
  return total / static_cast<double>(y.size());
}

MetaSolveResult solve_weights_detailed(const Matrix& Z, const Vector& y, const LossKind& loss,
                                       const MetaSolveOptions& options,
                                       const Vector* observation_weights) {
  validate(options);
  check_problem(Z, y, observation_weights);
  const auto K = static_cast<std::size_t>(Z.cols());

  SimplexWeights start = options.initial_point ? project_to_simplex(*options.initial_point)
                                               : SimplexWeights::uniform(K);
  if (K == 1) {
    MetaSolveResult r{start, meta_objective(Z, y, loss, start.alpha(), observation_weights), 0, true, {}};
    if (options.record_trace) r.trace.push_back(r.objective);
    return r;
  }

  double scale = std::max(y.cwiseAbs().maxCoeff(), Z.cwiseAbs().maxCoeff());
  if (!(scale > 0.0)) scale = 1.0;
  const Matrix Zs = Z / scale;
  const Vector ys = y / scale;
  const LossKind loss_s = rescaled(loss, scale);
  const Problem prob{Zs, ys, loss_s, observation_weights};

  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr double kMinStep = 1e-14;
  constexpr double kMaxStep = 1e14;

  Vector alpha = start.alpha();
  double f = prob.objective(alpha);
  Vector g = prob.gradient(alpha);
  double step = 1.0;
  Vector prev_alpha;
  Vector prev_g;

  MetaSolveResult result{start, 0.0, 0, false, {}};
  if (options.record_trace) result.trace.push_back(f * scale * scale);

  for (int it = 1; it <= options.max_iterations; ++it) {
    if (it > 1) {
      // Barzilai-Borwein trial step from the last accepted move.
      const Vector s = alpha - prev_alpha;
      const Vector dg = g - prev_g;
      const double sy = s.dot(dg);
      step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
      step = std::clamp(step, kMinStep, kMaxStep);
    }
    Vector candidate;
    double f_new = f;
    bool accepted = false;
    for (double t = step; t >= kMinStep; t *= kShrink) {
      candidate = project_to_simplex(alpha - t * g).alpha();
      const Vector d = candidate - alpha;
      if (d.cwiseAbs().maxCoeff() <= 1e-15) break;
      f_new = prob.objective(candidate);
      if (f_new <= f + kArmijo * g.dot(d)) {
        accepted = true;
        break;
      }
    }
    result.iterations = it;
    if (!accepted) {
      // Stationary, or no further decrease is representable at the smallest step.
      result.converged = true;
      break;
    }
    const double decrease = f - f_new;
    prev_alpha = alpha;
    prev_g = g;
    alpha = candidate;
    f = f_new;
    g = prob.gradient(alpha);
    if (options.record_trace) result.trace.push_back(f * scale * scale);
    if (decrease <= options.relative_objective_tolerance * std::max(std::abs(f), 1e-300)) {
      result.converged = true;
      break;
    }
  }
  result.weights = SimplexWeights(alpha);
  result.objective = meta_objective(Z, y, loss, alpha, observation_weights);
  return result;
}

SimplexWeights solve_weights(const Matrix& Z, const Vector& y, const LossKind& loss,
                             const MetaSolveOptions& options) {
  return solve_weights_detailed(Z, y, loss, options).weights;
}

SimplexWeights solve_weights(const LevelOneMatrix& level_one, const Vector& y,
                             const LossKind& loss, const MetaSolveOptions& options) {
  const Vector w = fold_balance_weights(level_one.plan);
  return solve_weights_detailed(level_one.Z, y, loss, options, &w).weights;
}

SimplexWeights discrete_select(const Matrix& Z, const Vector& y, const LossKind& loss,
                               const Vector* observation_weights) {
  check_problem(Z, y, observation_weights);
  const auto K = static_cast<std::size_t>(Z.cols());
  std::size_t best = 0;
  double best_risk = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const double risk = meta_objective(Z, y, loss, SimplexWeights::vertex(K, k).alpha(), observation_weights);
    if (risk < best_risk) {
      best_risk = risk;
      best = k;
    }
  }
  return SimplexWeights::vertex(K, best);
}

SimplexWeights discrete_select(const LevelOneMatrix& level_one, const Vector& y,
                               const LossKind& loss) {
  const Vector w = fold_balance_weights(level_one.plan);
  return discrete_select(level_one.Z, y, loss, &w);
}

MetaSolveResult solve_weights_on_lattice(const Matrix& Z, const Vector& y, const LossKind& loss,
                                         int resolution, const Vector* observation_weights) {
  check_problem(Z, y, observation_weights);
  if (resolution < 1) throw std::invalid_argument("lattice resolution must be >= 1");
  const Eigen::Index K = Z.cols();
  Vector counts = Vector::Zero(K);
  Vector best_alpha = Vector::Zero(K);
  double best = std::numeric_limits<double>::infinity();
  int evaluated = 0;
  std::function<void(Eigen::Index, int)> visit = [&](Eigen::Index k, int remaining) {
    if (k == K - 1) {
      counts[k] = remaining;
      const Vector alpha = counts / static_cast<double>(resolution);
      const double f = meta_objective(Z, y, loss, alpha, observation_weights);
      ++evaluated;
      if (f < best) {
        best = f;
        best_alpha = alpha;
      }
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      counts[k] = c;
      visit(k + 1, remaining - c);
    }
  };
  visit(0, resolution);
  return {SimplexWeights(best_alpha), best, evaluated, true, {}};
}

}  // namespace hubersl
