#include "hubersl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hubersl/parallel.hpp"
#include "hubersl/rng.hpp"

namespace hubersl {

namespace {

constexpr std::uint64_t kTrainTag = 0x7472;
constexpr std::uint64_t kTestTag = 0x7465;
constexpr std::uint64_t kFitTag = 0x6674;

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample variance with denominator n - 1 (0 for a single value).
double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

FamilyConfig replication_family(const FamilyConfig& base, std::uint64_t seed, std::size_t outer_workers) {
  FamilyConfig fc = base;
  fc.seed = seed;
  if (outer_workers > 1) fc.workers = 1;
  return fc;
}

}  // namespace

DataGenerator cost_generator(const CostScenario& scenario, const CovariateSpec& covariates) {
  return [scenario, covariates](std::size_t rows, std::uint64_t seed) {
    Dataset d;
    d.X = gen_covariates(rows, derive_seed(seed, {0}), covariates);
    d.y = gen_cost_two_stage(d.X, scenario, derive_seed(seed, {1}));
    d.feature_names = covariate_names();
    return d;
  };
}

LearnerRegistry default_experiment_library() {
  LearnerRegistry r;
  r.add(make_spec("ols", LearnerKind::OLS));
  r.add(make_spec("lasso", LearnerKind::Lasso));
  r.add(make_spec("knn", LearnerKind::KNN, {{"k", 10}}));
  r.add(make_spec("random_forest", LearnerKind::RandomForest, {{"trees", 100}}));
  return r;
}

std::string reference_estimator(Estimator e) {
  const bool discrete = e == Estimator::StandardDiscrete || e == Estimator::PartialDiscrete ||
                        e == Estimator::NestedDiscrete;
  return to_string(discrete ? Estimator::StandardDiscrete : Estimator::StandardSL);
}

const EstimatorSummary& PredictionReport::find(const std::string& estimator) const {
  for (const auto& s : summary) {
    if (s.estimator == estimator) return s;
  }
  throw std::out_of_range("no summary for estimator '" + estimator + "'");
}

Report PredictionReport::to_report() const {
  Report out;
  out.push_back({scenario, "data", "train_outlier_fraction", mean_train_outlier_fraction});
  out.push_back({scenario, "data", "train_zero_fraction", mean_train_zero_fraction});
  out.push_back({scenario, "data", "failed_replications", static_cast<double>(failures.size())});
  for (const auto& s : summary) {
    out.push_back({scenario, s.estimator, "mse", s.metrics.mse});
    out.push_back({scenario, s.estimator, "mse_se", s.mse_se});
    if (s.has_reference) out.push_back({scenario, s.estimator, "relative_mse", s.metrics.relative_mse});
    out.push_back({scenario, s.estimator, "r2", s.metrics.r2});
    if (s.has_reference) out.push_back({scenario, s.estimator, "re", s.metrics.re});
    out.push_back({scenario, s.estimator, "mae", s.metrics.mae});
    out.push_back({scenario, s.estimator, "replications", static_cast<double>(s.replications)});
  }
  return out;
}

PredictionReport run_prediction_experiment(const PredictionExperimentConfig& config) {
  if (!config.generator) throw ConfigError("prediction experiment needs a data generator");
  if (config.replications == 0) throw ConfigError("replications must be >= 1");
  if (config.n_test < 2) throw ConfigError("n_test must be >= 2");
  const auto& estimators = config.family.estimators;
  if (estimators.empty()) throw ConfigError("no estimators requested");

  struct Slot {
    bool ok = false;
    std::string error;
    std::vector<PredictionRow> rows;
    double outliers = 0.0;
    double zeros = 0.0;
  };
  std::vector<Slot> slots(config.replications);
  parallel_for(config.replications, config.workers, [&](std::size_t r) {
    Slot& slot = slots[r];
    try {
      const Dataset train = config.generator(config.n_train, derive_seed(config.seed, {r, kTrainTag}));
      const Dataset test = config.generator(config.n_test, derive_seed(config.seed, {r, kTestTag}));
      const auto models = fit_estimator_family(
          train, replication_family(config.family, derive_seed(config.seed, {r, kFitTag}), config.workers));
      for (const auto& m : models) {
        slot.rows.push_back({r, m.label, score(test.y, predict_super_learner(m, test.X)), m.lambda});
      }
      slot.outliers = train.rows() >= 4 ? outlier_fraction(train.y) : 0.0;
      slot.zeros = static_cast<double>((train.y.array() == 0.0).count()) / static_cast<double>(train.rows());
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.rows.clear();
      slot.error = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  PredictionReport report;
  report.scenario = config.scenario;
  std::vector<double> outliers, zeros;
  for (auto& s : slots) {
    if (!s.ok) {
      report.failures.push_back(s.error);
      continue;
    }
    outliers.push_back(s.outliers);
    zeros.push_back(s.zeros);
    report.rows.insert(report.rows.end(), s.rows.begin(), s.rows.end());
  }
  if (outliers.empty()) throw DataError("every replication failed; first error: " + report.failures.front());
  report.mean_train_outlier_fraction = mean_of(outliers);
  report.mean_train_zero_fraction = mean_of(zeros);

  std::vector<Scores> means;
  std::vector<double> ses;
  std::vector<std::size_t> counts;
  for (Estimator e : estimators) {
    std::vector<double> mse, mae, r2;
    for (const auto& row : report.rows) {
      if (row.estimator != to_string(e)) continue;
      mse.push_back(row.scores.mse);
      mae.push_back(row.scores.mae);
      r2.push_back(row.scores.r2);
    }
    means.push_back({mean_of(mse), mean_of(mae), mean_of(r2)});
    ses.push_back(std::sqrt(sample_variance(mse) / static_cast<double>(mse.size())));
    counts.push_back(mse.size());
  }
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    EstimatorSummary s;
    s.estimator = to_string(estimators[i]);
    s.mse_se = ses[i];
    s.replications = counts[i];
    const auto ref = std::find(estimators.begin(), estimators.end(), estimator_from_string(reference_estimator(estimators[i])));
    if (ref != estimators.end()) {
      s.metrics = relative_report(means[i], means[static_cast<std::size_t>(ref - estimators.begin())]);
      s.has_reference = true;
    } else {
      s.metrics = {means[i].mse, means[i].mae, means[i].r2, std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN()};
    }
    report.summary.push_back(s);
  }
  return report;
}

AteExperimentConfig default_ate_config() {
  AteExperimentConfig c;
  c.family.learners = default_experiment_library();
  c.family.estimators = {Estimator::StandardSL, Estimator::PartialSL, Estimator::NestedSL};
  return c;
}

const AteSummary& AteReport::find(const std::string& estimator) const {
  for (const auto& s : summary) {
    if (s.estimator == estimator) return s;
  }
  throw std::out_of_range("no summary for estimator '" + estimator + "'");
}

Report AteReport::to_report() const {
  Report out;
  out.push_back({scenario, "data", "true_ate", true_ate});
  out.push_back({scenario, "data", "zero_fraction", mean_zero_fraction});
  out.push_back({scenario, "data", "outlier_fraction", mean_outlier_fraction});
  out.push_back({scenario, "data", "max_abs_fluctuation_score", max_abs_score});
  out.push_back({scenario, "data", "failed_replications", static_cast<double>(failures.size())});
  for (const auto& s : summary) {
    out.push_back({scenario, s.estimator, "mean", s.mean});
    out.push_back({scenario, s.estimator, "bias", s.bias});
    out.push_back({scenario, s.estimator, "bias_se", s.bias_se});
    out.push_back({scenario, s.estimator, "variance", s.variance});
    out.push_back({scenario, s.estimator, "mse", s.mse});
    out.push_back({scenario, s.estimator, "relative_mse", s.relative_mse});
    out.push_back({scenario, s.estimator, "replications", static_cast<double>(s.replications)});
  }
  return out;
}

Matrix ate_design(const Matrix& covariates) {
  if (covariates.cols() < 5) throw DataError("ATE design needs covariates X1..X5");
  return covariates.leftCols(5);
}

AteReport run_ate_experiment(const AteExperimentConfig& config) {
  validate(config.scenario);
  if (config.replications == 0) throw ConfigError("replications must be >= 1");
  if (config.family.estimators.empty()) throw ConfigError("no outcome-model estimators requested");

  AteReport report;
  report.scenario = config.scenario.name;
  report.true_ate = config.true_ate ? *config.true_ate
                                    : tweedie_true_ate(config.scenario, config.truth_draws,
                                                       derive_seed(config.seed, {0x7275}), config.covariates);
  std::vector<std::string> labels{"unadjusted"};
  for (Estimator e : config.family.estimators) labels.push_back("tmle-" + to_string(e));

  struct Slot {
    bool ok = false;
    std::string error;
    std::vector<AteRow> rows;
    double zeros = 0.0;
    double outliers = 0.0;
  };
  std::vector<Slot> slots(config.replications);
  parallel_for(config.replications, config.workers, [&](std::size_t r) {
    Slot& slot = slots[r];
    try {
      const Matrix X = gen_covariates(config.n, derive_seed(config.seed, {r, kTrainTag, 0}), config.covariates);
      Dataset data;
      data.X = ate_design(X);
      data.y = gen_tweedie_outcome(X, config.scenario, derive_seed(config.seed, {r, kTrainTag, 1}));
      data.feature_names = {"X1", "X2", "X3", "X4", "X5"};
      data.treatment = data.X.col(0);
      const Vector& a = *data.treatment;

      const AteEstimate unadj = unadjusted_ate(data.y, a);
      slot.rows.push_back({r, labels[0], unadj.estimate, 0.0, 0.0});
      const PropensityModel g = fit_propensity(data.X.rightCols(4), a, derive_seed(config.seed, {r, 0x67}));
      const auto models = fit_estimator_family(
          data, replication_family(config.family, derive_seed(config.seed, {r, kFitTag}), config.workers));
      for (std::size_t m = 0; m < models.size(); ++m) {
        const AteEstimate est = tmle_ate(data, models[m], g, config.fluctuation);
        slot.rows.push_back({r, labels[m + 1], est.estimate, est.epsilon, est.score});
      }
      slot.zeros = static_cast<double>((data.y.array() == 0.0).count()) / static_cast<double>(config.n);
      slot.outliers = outlier_fraction(data.y);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.rows.clear();
      slot.error = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  std::vector<double> zeros, outliers;
  for (auto& s : slots) {
    if (!s.ok) {
      report.failures.push_back(s.error);
      continue;
    }
    zeros.push_back(s.zeros);
    outliers.push_back(s.outliers);
    for (const auto& row : s.rows) report.max_abs_score = std::max(report.max_abs_score, std::abs(row.score));
    report.rows.insert(report.rows.end(), s.rows.begin(), s.rows.end());
  }
  if (zeros.empty()) throw DataError("every replication failed; first error: " + report.failures.front());
  report.mean_zero_fraction = mean_of(zeros);
  report.mean_outlier_fraction = mean_of(outliers);

  for (const auto& label : labels) {
    std::vector<double> est;
    for (const auto& row : report.rows) {
      if (row.estimator == label) est.push_back(row.estimate);
    }
    AteSummary s;
    s.estimator = label;
    s.replications = est.size();
    s.mean = mean_of(est);
    s.bias = s.mean - report.true_ate;
    const double R = static_cast<double>(est.size());
    s.variance = sample_variance(est) * (R - 1.0) / R;
    s.bias_se = std::sqrt(sample_variance(est) / R);
    s.mse = s.bias * s.bias + s.variance;
    report.summary.push_back(s);
  }
  const std::string ref = "tmle-" + to_string(Estimator::StandardSL);
  const auto it = std::find_if(report.summary.begin(), report.summary.end(),
                               [&](const AteSummary& s) { return s.estimator == ref; });
  if (it != report.summary.end() && it->mse > 0.0) {
    const double ref_mse = it->mse;
    for (auto& s : report.summary) s.relative_mse = s.mse / ref_mse;
  }
  return report;
}

LearnerRegistry oracle_trend_library() {
  LearnerRegistry r;
  r.add(make_spec("ols", LearnerKind::OLS));
  r.add(make_spec("lasso", LearnerKind::Lasso));
  r.add(make_spec("tree", LearnerKind::RegressionTree, {{"min_leaf", 20}, {"max_depth", 6}}));
  r.add(make_spec("random_forest", LearnerKind::RandomForest, {{"trees", 50}, {"max_depth", 10}}));
  return r;
}

Report OracleTrendReport::to_report() const {
  Report out;
  out.push_back({"oracle-trend", "data", "lambda", lambda});
  for (const auto& p : points) {
    const std::string est = "n=" + std::to_string(p.n);
    out.push_back({"oracle-trend", est, "median_gap", p.median_gap});
    out.push_back({"oracle-trend", est, "median_gap_se", p.median_gap_se});
    out.push_back({"oracle-trend", est, "replications", static_cast<double>(p.gaps.size())});
  }
  return out;
}

OracleTrendReport run_oracle_trend(const OracleTrendConfig& config) {
  if (config.learners.empty()) throw ConfigError("oracle trend needs a learner library");
  if (config.sample_sizes.empty() || config.replications == 0) throw ConfigError("oracle trend needs sizes and replications");
  OracleTrendReport report;
  if (config.lambda) {
    report.lambda = *config.lambda;
  } else {
    const Matrix X = gen_covariates(config.mc_draws, derive_seed(config.seed, {0x9110, 0}), config.covariates);
    const Vector y = gen_cost_two_stage(X, {config.regime, config.tail_design_n}, derive_seed(config.seed, {0x9110, 1}));
    report.lambda = quantile_type7(std::vector<double>(y.data(), y.data() + y.size()), 0.75);
  }
  const LossKind loss = huber(report.lambda);

  const std::size_t S = config.sample_sizes.size();
  const std::size_t R = config.replications;
  std::vector<std::optional<OracleGap>> gaps(S * R);
  std::vector<std::string> errors(S * R);
  parallel_for(S * R, config.workers, [&](std::size_t task) {
    const std::size_t n = config.sample_sizes[task / R];
    const std::size_t r = task % R;
    try {
      const CostScenario scenario{config.regime, config.tail_design_n};
      Dataset data;
      data.X = gen_covariates(n, derive_seed(config.seed, {n, r, 0}), config.covariates);
      data.y = gen_cost_two_stage(data.X, scenario, derive_seed(config.seed, {n, r, 1}));
      const FoldPlan plan = make_folds(n, config.V, derive_seed(config.seed, {n, r, 2}));
      LevelOneOptions lo;
      lo.keep_fold_fits = true;
      const LevelOneMatrix L = build_level_one(data, config.learners, plan, derive_seed(config.seed, {n, r, 3}), lo);
      const SimplexWeights alpha_hat = solve_weights(L, data.y, loss, config.meta);
      RiskOracle oracle;
      oracle.X = gen_covariates(config.mc_draws, derive_seed(config.seed, {n, r, 4}), config.covariates);
      oracle.y = gen_cost_two_stage(oracle.X, scenario, derive_seed(config.seed, {n, r, 5}));
      gaps[task] = compare_to_oracle(L.fold_fits, oracle, loss, alpha_hat, config.meta);
    } catch (const std::exception& e) {
      errors[task] = "n=" + std::to_string(n) + " replication " + std::to_string(r) + ": " + e.what();
    }
  });

  for (std::size_t s = 0; s < S; ++s) {
    OracleTrendPoint p;
    p.n = config.sample_sizes[s];
    std::vector<double> g, se;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& slot = gaps[s * R + r];
      if (!slot) {
        report.failures.push_back(errors[s * R + r]);
        continue;
      }
      p.gaps.push_back(*slot);
      g.push_back(slot->gap);
      se.push_back(slot->gap_se);
    }
    if (!g.empty()) {
      p.median_gap = quantile_type7(g, 0.5);
      p.median_gap_se = quantile_type7(se, 0.5);
    }
    report.points.push_back(std::move(p));
  }
  return report;
}

std::vector<LambdaStability> lambda_stability(const Dataset& data, const FamilyConfig& family,
                                              std::size_t splits, std::uint64_t seed) {
  if (splits < 2) throw ConfigError("lambda stability needs at least two splits");
  FamilyConfig fc = family;
  if (fc.lambda_grid.empty()) fc.lambda_grid = default_lambda_grid(data.y, fc.grid_size, fc.grid_spacing).values();
  fc.estimators.erase(std::remove_if(fc.estimators.begin(), fc.estimators.end(),
                                     [](Estimator e) {
                                       return e == Estimator::StandardDiscrete || e == Estimator::StandardSL;
                                     }),
                      fc.estimators.end());
  if (fc.estimators.empty()) throw ConfigError("lambda stability needs a Huber estimator");

  std::vector<LambdaStability> out;
  for (Estimator e : fc.estimators) out.push_back({to_string(e), {}, {}, 0.0, 0.0});
  std::vector<std::vector<std::size_t>> idx_a(out.size()), idx_b(out.size());
  const std::size_t n = data.rows();
  for (std::size_t s = 0; s < splits; ++s) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(derive_seed(seed, {s, 0}));
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::vector<std::size_t> half_a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n / 2));
    const std::vector<std::size_t> half_b(perm.begin() + static_cast<std::ptrdiff_t>(n / 2), perm.end());
    for (int h = 0; h < 2; ++h) {
      const auto& rows = h == 0 ? half_a : half_b;
      Dataset d{select_rows(data.X, rows), select_rows(data.y, rows), data.feature_names, std::nullopt};
      fc.seed = derive_seed(seed, {s, static_cast<std::uint64_t>(h + 1)});
      const auto models = fit_estimator_family(d, fc);
      for (std::size_t m = 0; m < models.size(); ++m) {
        (h == 0 ? out[m].lambda_a : out[m].lambda_b).push_back(*models[m].lambda);
        (h == 0 ? idx_a[m] : idx_b[m]).push_back(models[m].selection->chosen_index);
      }
    }
  }
  for (std::size_t m = 0; m < out.size(); ++m) {
    const Vector a = Eigen::Map<const Vector>(out[m].lambda_a.data(), static_cast<Eigen::Index>(splits));
    const Vector b = Eigen::Map<const Vector>(out[m].lambda_b.data(), static_cast<Eigen::Index>(splits));
    try {
      out[m].icc = icc(a, b);
    } catch (const std::invalid_argument&) {
      out[m].icc = std::numeric_limits<double>::quiet_NaN();
    }
    out[m].accuracy = lambda_match_accuracy(idx_a[m], idx_b[m]);
  }
  return out;
}

}  // namespace hubersl
