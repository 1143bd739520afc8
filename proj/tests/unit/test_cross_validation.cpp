#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "hubersl/cross_validation.hpp"

using namespace hubersl;

TEST_SUITE("cross_validation") {

TEST_CASE("fold sizes") {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const FoldPlan p10 = make_folds(10, 10, seed);
    for (auto s : p10.fold_sizes()) CHECK(s == 1);
    const FoldPlan p11 = make_folds(11, 10, seed);
    auto sizes = p11.fold_sizes();
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes.back() == 2);
    CHECK(std::count(sizes.begin(), sizes.end(), 1u) == 9);
  }
  const FoldPlan p = make_folds(103, 10, 5);
  const auto sizes = p.fold_sizes();
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
}

TEST_CASE("invalid fold counts") {
  CHECK_THROWS_AS(make_folds(5, 6, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(5, 1, 1), std::invalid_argument);
}

TEST_CASE("folds are deterministic, exhaustive and exclusive") {
  const FoldPlan a = make_folds(57, 7, 123);
  const FoldPlan b = make_folds(57, 7, 123);
  CHECK(a.assignment == b.assignment);
  CHECK(a.assignment != make_folds(57, 7, 124).assignment);
  std::vector<int> seen(57, 0);
  for (std::size_t v = 0; v < 7; ++v) {
    const auto val = a.validation_indices(v);
    const auto tr = a.training_indices(v);
    CHECK(val.size() + tr.size() == 57);
    for (auto i : val) ++seen[i];
    for (auto i : tr) CHECK(a.assignment[i] != v);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK_NOTHROW(check_fold_plan(a));
}

TEST_CASE("fold membership is uniform across seeds") {
  const std::size_t n = 20, V = 4, seeds = 100;
  std::vector<std::vector<int>> counts(n, std::vector<int>(V, 0));
  for (std::size_t s = 0; s < seeds; ++s) {
    const FoldPlan p = make_folds(n, V, s);
    for (std::size_t i = 0; i < n; ++i) ++counts[i][p.assignment[i]];
  }
  const double expected = double(seeds) / V;
  const double se = std::sqrt(seeds * (1.0 / V) * (1.0 - 1.0 / V));
  for (const auto& row : counts)
    for (int c : row) CHECK(std::fabs(c - expected) <= 4 * se);
}

TEST_CASE("zero-stratified folds spread zeros evenly") {
  Vector y = Vector::Zero(40);
  for (int i = 0; i < 40; i += 3) y[i] = 1.0 + i;
  const FoldPlan p = make_zero_stratified_folds(y, 4, 3);
  CHECK_NOTHROW(check_fold_plan(p));
  std::vector<int> zeros(4, 0);
  for (std::size_t i = 0; i < 40; ++i) zeros[p.assignment[i]] += y[i] == 0.0;
  CHECK(*std::max_element(zeros.begin(), zeros.end()) - *std::min_element(zeros.begin(), zeros.end()) <= 1);
}

TEST_CASE("fold balance weights average per-fold means") {
  const FoldPlan p = make_folds(11, 3, 4);
  const Vector w = fold_balance_weights(p);
  Vector x = Vector::LinSpaced(11, 1.0, 11.0);
  double per_fold = 0.0;
  for (std::size_t v = 0; v < 3; ++v) {
    const auto idx = p.validation_indices(v);
    double s = 0.0;
    for (auto i : idx) s += x[i];
    per_fold += s / idx.size();
  }
  CHECK(w.dot(x) / 11.0 == doctest::Approx(per_fold / 3.0).epsilon(1e-14));
  CHECK(fold_balance_weights(make_folds(12, 3, 4)).isOnes(0.0));
}

TEST_CASE("mean learner column is the out-of-fold mean") {
  std::mt19937_64 rng(1);
  Dataset d = testing::linear_data(rng, 30, 2);
  LearnerRegistry reg;
  reg.add(make_spec("mean", LearnerKind::Mean));
  const FoldPlan p = make_folds(30, 5, 2);
  const LevelOneMatrix L = build_level_one(d, reg, p, 7);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto tr = p.training_indices(p.assignment[i]);
    double s = 0.0;
    for (auto j : tr) s += d.y[j];
    CHECK(L.Z(i, 0) == doctest::Approx(s / tr.size()).epsilon(1e-13));
  }
  CHECK(L.learner_names == std::vector<std::string>{"mean"});
}

TEST_CASE("leave-one-out OLS reproduces a noiseless linear outcome") {
  std::mt19937_64 rng(2);
  Dataset d;
  d.X = testing::random_matrix(rng, 30, 3);
  d.y = 1.5 + (d.X * Vector::LinSpaced(3, 2.0, -1.0)).array();
  LearnerRegistry reg;
  reg.add(make_spec("ols", LearnerKind::OLS));
  const LevelOneMatrix L = build_level_one(d, reg, make_folds(30, 30, 3), 9);
  CHECK((L.Z.col(0) - d.y).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("row relabeling leaves level-one pairs unchanged") {
  std::mt19937_64 rng(3);
  Dataset d = testing::linear_data(rng, 24, 2);
  LearnerRegistry reg;
  reg.add(make_spec("mean", LearnerKind::Mean));
  reg.add(make_spec("ols", LearnerKind::OLS));
  const FoldPlan p = make_folds(24, 4, 5);
  const LevelOneMatrix L = build_level_one(d, reg, p, 1);

  std::vector<std::size_t> perm(24);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset dp{select_rows(d.X, perm), select_rows(d.y, perm), d.feature_names, std::nullopt};
  FoldPlan pp = p;
  for (std::size_t i = 0; i < 24; ++i) pp.assignment[i] = p.assignment[perm[i]];
  const LevelOneMatrix Lp = build_level_one(dp, reg, pp, 1);
  for (std::size_t i = 0; i < 24; ++i) {
    CHECK(Lp.Z(i, 0) == doctest::Approx(L.Z(perm[i], 0)).epsilon(1e-12));
    CHECK(Lp.Z(i, 1) == doctest::Approx(L.Z(perm[i], 1)).epsilon(1e-9));
  }
}

TEST_CASE("a failing learner falls back to the training mean and is logged") {
  std::mt19937_64 rng(4);
  Dataset d = testing::linear_data(rng, 20, 2);
  LearnerRegistry reg;
  reg.add(make_spec("mean", LearnerKind::Mean));
  reg.add(make_spec("logit_on_continuous", LearnerKind::LogisticGLM));
  const LevelOneMatrix L = build_level_one(d, reg, make_folds(20, 4, 1), 3);
  CHECK((L.Z.col(0) - L.Z.col(1)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(L.log.size() >= 4);
  CHECK(L.log.front().learner == "logit_on_continuous");
}

TEST_CASE("no leakage and schedule independence") {
  std::mt19937_64 rng(5);
  Dataset d = testing::linear_data(rng, 60, 3);
  LearnerRegistry reg;
  reg.add(make_spec("ols", LearnerKind::OLS));
  reg.add(make_spec("knn", LearnerKind::KNN, {{"k", 5}}));
  reg.add(make_spec("rf", LearnerKind::RandomForest, {{"trees", 20}}));
  const FoldPlan p = make_folds(60, 5, 8);
  const LevelOneMatrix L = build_level_one(d, reg, p, 10);

  LevelOneOptions par;
  par.workers = 4;
  const LevelOneMatrix L4 = build_level_one(d, reg, p, 10, par);
  CHECK(L.Z == L4.Z);

  for (std::size_t v = 0; v < 5; ++v) {
    Dataset bad = d;
    for (auto i : p.validation_indices(v)) bad.y[i] = 1e6 * (i % 2 ? 1 : -1);
    const LevelOneMatrix Lb = build_level_one(bad, reg, p, 10);
    for (auto i : p.validation_indices(v)) CHECK(Lb.Z.row(i) == L.Z.row(i));
  }
}

TEST_CASE("kept fold fits reproduce the level-one entries") {
  std::mt19937_64 rng(6);
  Dataset d = testing::linear_data(rng, 30, 2);
  LearnerRegistry reg;
  reg.add(make_spec("ridge", LearnerKind::Ridge));
  const FoldPlan p = make_folds(30, 3, 2);
  LevelOneOptions keep;
  keep.keep_fold_fits = true;
  const LevelOneMatrix L = build_level_one(d, reg, p, 4, keep);
  REQUIRE(L.fold_fits.size() == 3);
  for (std::size_t v = 0; v < 3; ++v) {
    const auto idx = p.validation_indices(v);
    const Vector pred = L.fold_fits[v][0]->predict(select_rows(d.X, idx));
    for (std::size_t j = 0; j < idx.size(); ++j) CHECK(pred[j] == L.Z(idx[j], 0));
  }
}

}
