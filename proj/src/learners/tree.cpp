#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hubersl/learners.hpp"
#include "hubersl/rng.hpp"
#include "internal.hpp"

namespace hubersl::detail {

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

using Tree = std::vector<TreeNode>;

struct TreeParams {
  std::size_t min_leaf = 5;
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t mtry = 0;       // 0: all features
};

// CART regression tree grown by greedy SSE reduction. Rows are referenced by
// index so bootstrap samples can repeat rows without copying the design.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const Vector& y, TreeParams params, Rng* rng)
      : X_(X), y_(y), params_(params), rng_(rng), features_(static_cast<std::size_t>(X.cols())) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    scratch_.resize(rows_.size());
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t m = end - begin;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[static_cast<Eigen::Index>(rows_[i])];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({-1, 0.0, -1, -1, sum / static_cast<double>(m)});

    const bool depth_ok = params_.max_depth == 0 || depth < params_.max_depth;
    if (!depth_ok || lo == hi || m < 2 * params_.min_leaf) return id;

    const Split split = best_split(begin, end, sum);
    if (split.feature < 0) return id;

    const auto mid_it = std::partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin),
        rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
          return X_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold;
        });
    const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    nodes_[static_cast<std::size_t>(id)].feature = split.feature;
    nodes_[static_cast<std::size_t>(id)].threshold = split.threshold;
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end, double sum) {
    const std::size_t m = end - begin;
    const std::size_t p = features_.size();
    std::size_t tries = p;
    if (params_.mtry > 0 && params_.mtry < p && rng_ != nullptr) {
      tries = params_.mtry;
      for (std::size_t j = 0; j < tries; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, p - 1);
        std::swap(features_[j], features_[pick(*rng_)]);
      }
    } else {
      std::iota(features_.begin(), features_.end(), 0);
    }

    double sum_sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[static_cast<Eigen::Index>(rows_[i])];
      sum_sq += v * v;
    }
    const double parent_score = sum * sum / static_cast<double>(m);
    const double parent_sse = sum_sq - parent_score;
    Split best;
    best.score = parent_score + 1e-10 * std::max(parent_sse, 0.0);

    for (std::size_t t = 0; t < tries; ++t) {
      const auto f = static_cast<Eigen::Index>(features_[t]);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = rows_[begin + i];
        scratch_[i] = {X_(static_cast<Eigen::Index>(r), f), y_[static_cast<Eigen::Index>(r)]};
      }
      std::sort(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(m));
      if (scratch_[0].first == scratch_[m - 1].first) continue;
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        left_sum += scratch_[i].second;
        const std::size_t nl = i + 1;
        if (scratch_[i].first == scratch_[i + 1].first) continue;
        if (nl < params_.min_leaf || m - nl < params_.min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(nl) +
                             right_sum * right_sum / static_cast<double>(m - nl);
        if (score > best.score) {
          best.score = score;
          best.feature = static_cast<int>(f);
          double thr = 0.5 * (scratch_[i].first + scratch_[i + 1].first);
          if (!(thr < scratch_[i + 1].first)) thr = scratch_[i].first;
          best.threshold = thr;
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  const Vector& y_;
  TreeParams params_;
  Rng* rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  std::vector<std::pair<double, double>> scratch_;
  Tree nodes_;
};

double predict_tree(const Tree& tree, const Matrix& X, Eigen::Index row) {
  std::size_t node = 0;
  while (tree[node].feature >= 0) {
    const TreeNode& nd = tree[node];
    node = static_cast<std::size_t>(X(row, nd.feature) <= nd.threshold ? nd.left : nd.right);
  }
  return tree[node].value;
}

nlohmann::json tree_to_json(const Tree& tree) {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;
  for (const auto& nd : tree) {
    feature.push_back(nd.feature);
    threshold.push_back(nd.threshold);
    left.push_back(nd.left);
    right.push_back(nd.right);
    value.push_back(nd.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value}};
}

Tree tree_from_state(const nlohmann::json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  Tree tree(feature.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    tree[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
  }
  return tree;
}

class TreeModel final : public ModelBase {
 public:
  TreeModel(LearnerSpec spec, std::size_t p, ClampRange clamp, Tree tree)
      : ModelBase(std::move(spec), p, clamp), tree_(std::move(tree)) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_tree(tree_, X, r);
  }
  nlohmann::json state_json() const override { return tree_to_json(tree_); }

 private:
  Tree tree_;
};

class ForestModel final : public ModelBase {
 public:
  ForestModel(LearnerSpec spec, std::size_t p, ClampRange clamp, std::vector<Tree> trees)
      : ModelBase(std::move(spec), p, clamp), trees_(std::move(trees)) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      double total = 0.0;
      for (const auto& t : trees_) total += predict_tree(t, X, r);
      out[r] = total / static_cast<double>(trees_.size());
    }
  }
  nlohmann::json state_json() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(tree_to_json(t));
    return {{"trees", trees}};
  }

 private:
  std::vector<Tree> trees_;
};

TreeParams tree_params(const LearnerSpec& spec, std::size_t default_min_leaf) {
  TreeParams params;
  params.min_leaf = static_cast<std::size_t>(spec.param("min_leaf", static_cast<double>(default_min_leaf)));
  params.max_depth = static_cast<std::size_t>(spec.param("max_depth", 0.0));
  return params;
}

// Lexicographic (x, y) order; makes the forest independent of input row order.
std::vector<std::size_t> canonical_order(const Matrix& X, const Vector& y) {
  std::vector<std::size_t> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (X(ia, j) != X(ib, j)) return X(ia, j) < X(ib, j);
    }
    if (y[ia] != y[ib]) return y[ia] < y[ib];
    return false;
  });
  return order;
}

}  // namespace

LearnerPtr fit_tree(const LearnerSpec& spec, const Matrix& X, const Vector& y) {
  TreeBuilder builder(X, y, tree_params(spec, 5), nullptr);
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return std::make_shared<TreeModel>(spec, static_cast<std::size_t>(X.cols()), default_clamp(y),
                                     builder.build(std::move(rows)));
}

LearnerPtr fit_forest(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                      std::uint64_t seed) {
  const auto p = static_cast<std::size_t>(X.cols());
  const auto n = static_cast<std::size_t>(X.rows());
  TreeParams params = tree_params(spec, 5);
  params.mtry = static_cast<std::size_t>(
      spec.param("mtry", std::ceil(static_cast<double>(p) / 3.0)));
  params.mtry = std::clamp<std::size_t>(params.mtry, 1, p);
  const auto n_trees = static_cast<std::size_t>(spec.param("trees", 200));

  const auto order = canonical_order(X, y);
  const Matrix Xc = select_rows(X, order);
  const Vector yc = select_rows(y, order);

  std::vector<Tree> trees;
  trees.reserve(n_trees);
  std::vector<std::size_t> sample(n);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng = make_rng(derive_seed(seed, {t}));
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    for (auto& s : sample) s = draw(rng);
    TreeBuilder builder(Xc, yc, params, &rng);
    trees.push_back(builder.build(sample));
  }
  return std::make_shared<ForestModel>(spec, p, default_clamp(y), std::move(trees));
}

LearnerPtr tree_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                          const nlohmann::json& state) {
  return std::make_shared<TreeModel>(spec, p, clamp, tree_from_state(state));
}

LearnerPtr forest_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                            const nlohmann::json& state) {
  std::vector<Tree> trees;
  for (const auto& t : state.at("trees")) trees.push_back(tree_from_state(t));
  return std::make_shared<ForestModel>(spec, p, clamp, std::move(trees));
}

}  // namespace hubersl::detail
