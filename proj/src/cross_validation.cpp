#include "hubersl/cross_validation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "hubersl/parallel.hpp"
#include "hubersl/rng.hpp"

namespace hubersl {

std::vector<std::size_t> FoldPlan::validation_indices(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment[i] == v) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t v) const {
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment[i] != v) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(V, 0);
  for (std::size_t f : assignment) ++sizes.at(f);
  return sizes;
}

FoldPlan make_folds(std::size_t n, std::size_t V, std::uint64_t seed) {
  if (V < 2) throw std::invalid_argument("fold count must be at least 2");
  if (V > n) throw std::invalid_argument("fold count exceeds sample size");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldPlan plan{n, V, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) plan.assignment[perm[i]] = i % V;
  return plan;
}

FoldPlan make_zero_stratified_folds(const Vector& y, std::size_t V, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(y.size());
  if (V < 2) throw std::invalid_argument("fold count must be at least 2");
  if (V > n) throw std::invalid_argument("fold count exceeds sample size");
  std::vector<std::size_t> zeros;
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < n; ++i) {
    (y[static_cast<Eigen::Index>(i)] == 0.0 ? zeros : positives).push_back(i);
  }
  Rng rng = make_rng(seed);
  std::shuffle(zeros.begin(), zeros.end(), rng);
  std::shuffle(positives.begin(), positives.end(), rng);
  FoldPlan plan{n, V, std::vector<std::size_t>(n)};
  std::size_t slot = 0;
  for (std::size_t i : zeros) plan.assignment[i] = slot++ % V;
  for (std::size_t i : positives) plan.assignment[i] = slot++ % V;
  return plan;
}

void check_fold_plan(const FoldPlan& plan) {
  if (plan.V < 2 || plan.V > plan.n) throw std::invalid_argument("fold plan needs 2 <= V <= n");
  if (plan.assignment.size() != plan.n) throw std::invalid_argument("fold plan size mismatch");
  for (std::size_t f : plan.assignment) {
    if (f >= plan.V) throw std::invalid_argument("fold index out of range");
  }
  for (std::size_t s : plan.fold_sizes()) {
    if (s == 0) throw std::invalid_argument("empty validation fold");
  }
}

Vector fold_balance_weights(const FoldPlan& plan) {
  const auto sizes = plan.fold_sizes();
  Vector w(static_cast<Eigen::Index>(plan.n));
  for (std::size_t i = 0; i < plan.n; ++i) {
    w[static_cast<Eigen::Index>(i)] =
        static_cast<double>(plan.n) /
        (static_cast<double>(plan.V) * static_cast<double>(sizes[plan.assignment[i]]));
  }
  return w;
}

LevelOneMatrix build_level_one(const Dataset& data, const LearnerRegistry& learners,
                               const FoldPlan& plan, std::uint64_t seed,
                               const LevelOneOptions& options) {
  check_fold_plan(plan);
  if (plan.n != data.rows()) throw std::invalid_argument("fold plan does not match dataset size");
  if (learners.empty()) throw std::invalid_argument("learner registry is empty");
  const std::size_t K = learners.size();
  const std::size_t V = plan.V;

  LevelOneMatrix out;
  out.Z = Matrix::Zero(static_cast<Eigen::Index>(plan.n), static_cast<Eigen::Index>(K));
  out.plan = plan;
  out.learner_names = learners.names();
  out.fold_fits.assign(options.keep_fold_fits ? V : 0, std::vector<LearnerPtr>(K));

  std::vector<std::vector<std::size_t>> train(V);
  std::vector<std::vector<std::size_t>> valid(V);
  for (std::size_t v = 0; v < V; ++v) {
    train[v] = plan.training_indices(v);
    valid[v] = plan.validation_indices(v);
  }

  // One task per (v, k) cell; each writes only its own block of Z.
  std::vector<FitLog> logs(V * K);
  std::vector<LearnerPtr> fits(V * K);
  parallel_for(V * K, options.workers, [&](std::size_t task) {
    const std::size_t v = task / K;
    const std::size_t k = task % K;
    const Matrix Xt = select_rows(data.X, train[v]);
    const Vector yt = select_rows(data.y, train[v]);
    FitLog& log = logs[task];
    LearnerPtr model;
    try {
      model = fit(learners[k], Xt, yt, derive_seed(seed, {k, v}), &log);
    } catch (const std::exception& e) {
      log.push_back({learners[k].name, static_cast<int>(v),
                     std::string("fit failed (") + e.what() + "); training-mean fallback"});
      model = fit(make_spec(learners[k].name, LearnerKind::Mean), Xt, yt, 0);
    }
    for (auto& ev : log) ev.fold = static_cast<int>(v);
    const Vector pred = model->predict(select_rows(data.X, valid[v]));
    for (std::size_t r = 0; r < valid[v].size(); ++r) {
      out.Z(static_cast<Eigen::Index>(valid[v][r]), static_cast<Eigen::Index>(k)) =
          pred[static_cast<Eigen::Index>(r)];
    }
    fits[task] = std::move(model);
  });

  for (std::size_t task = 0; task < V * K; ++task) {
    out.log.insert(out.log.end(), logs[task].begin(), logs[task].end());
    if (options.keep_fold_fits) out.fold_fits[task / K][task % K] = fits[task];
  }
  return out;
}

}  // namespace hubersl
