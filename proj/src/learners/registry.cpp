#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

#include "hubersl/learners.hpp"
#include "internal.hpp"

namespace hubersl {

namespace {

std::atomic<std::uint64_t> g_fit_count{0};

struct KindName {
  LearnerKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {LearnerKind::Mean, "Mean"},
    {LearnerKind::OLS, "OLS"},
    {LearnerKind::Ridge, "Ridge"},
    {LearnerKind::Lasso, "Lasso"},
    {LearnerKind::KNN, "KNN"},
    {LearnerKind::RegressionTree, "RegressionTree"},
    {LearnerKind::RandomForest, "RandomForest"},
    {LearnerKind::LogisticGLM, "LogisticGLM"},
    {LearnerKind::TwoStage, "TwoStage"},
};

std::set<std::string> allowed_keys(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Mean:
    case LearnerKind::OLS:
    case LearnerKind::TwoStage:
      return {};
    case LearnerKind::Ridge:
      return {"penalty"};
    case LearnerKind::Lasso:
      return {"penalty", "cv_folds", "grid_size", "tolerance", "max_sweeps"};
    case LearnerKind::KNN:
      return {"k", "standardize"};
    case LearnerKind::RegressionTree:
      return {"max_depth", "min_leaf"};
    case LearnerKind::RandomForest:
      return {"trees", "mtry", "min_leaf", "max_depth"};
    case LearnerKind::LogisticGLM:
      return {"ridge", "max_iterations", "tolerance"};
  }
  return {};
}

void require(bool ok, const LearnerSpec& spec, const std::string& what) {
  if (!ok) throw ConfigError("learner '" + spec.name + "': " + what);
}

bool is_count(double v) { return std::isfinite(v) && v >= 1.0 && v == std::floor(v); }

}  // namespace

std::string to_string(LearnerKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "Unknown";
}

LearnerKind learner_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw ConfigError("unknown learner kind '" + name + "'");
}

double LearnerSpec::param(const std::string& key, double fallback) const {
  auto it = hyperparameters.find(key);
  return it == hyperparameters.end() ? fallback : it->second;
}

LearnerSpec make_spec(std::string name, LearnerKind kind,
                      std::map<std::string, double> hyperparameters) {
  LearnerSpec s;
  s.name = std::move(name);
  s.kind = kind;
  s.hyperparameters = std::move(hyperparameters);
  validate(s);
  return s;
}

LearnerSpec make_two_stage_spec(std::string name, LearnerSpec classifier, LearnerSpec regressor) {
  LearnerSpec s;
  s.name = std::move(name);
  s.kind = LearnerKind::TwoStage;
  s.stages = {std::move(classifier), std::move(regressor)};
  validate(s);
  return s;
}

void validate(const LearnerSpec& spec) {
  if (spec.name.empty()) throw ConfigError("learner name must not be empty");
  const auto allowed = allowed_keys(spec.kind);
  for (const auto& [key, value] : spec.hyperparameters) {
    require(allowed.contains(key), spec,
            "unknown hyperparameter '" + key + "' for kind " + to_string(spec.kind));
    require(std::isfinite(value), spec, "hyperparameter '" + key + "' must be finite");
  }
  switch (spec.kind) {
    case LearnerKind::Ridge:
      require(spec.param("penalty", 1.0) >= 0.0, spec, "penalty must be >= 0");
      break;
    case LearnerKind::Lasso:
      if (spec.has("penalty")) require(spec.param("penalty", 0.0) >= 0.0, spec, "penalty must be >= 0");
      require(is_count(spec.param("cv_folds", 5)) && spec.param("cv_folds", 5) >= 2, spec,
              "cv_folds must be an integer >= 2");
      require(is_count(spec.param("grid_size", 50)), spec, "grid_size must be an integer >= 1");
      require(spec.param("tolerance", 1e-7) > 0.0, spec, "tolerance must be > 0");
      require(is_count(spec.param("max_sweeps", 10000)), spec, "max_sweeps must be >= 1");
      break;
    case LearnerKind::KNN:
      require(is_count(spec.param("k", 10)), spec, "k must be an integer >= 1");
      break;
    case LearnerKind::RegressionTree:
    case LearnerKind::RandomForest:
      if (spec.has("max_depth")) require(is_count(spec.param("max_depth", 1)), spec, "max_depth must be >= 1");
      require(is_count(spec.param("min_leaf", 5)), spec, "min_leaf must be an integer >= 1");
      if (spec.kind == LearnerKind::RandomForest) {
        require(is_count(spec.param("trees", 200)), spec, "trees must be an integer >= 1");
        if (spec.has("mtry")) require(is_count(spec.param("mtry", 1)), spec, "mtry must be >= 1");
      }
      break;
    case LearnerKind::LogisticGLM:
      require(spec.param("ridge", 1e-6) >= 0.0, spec, "ridge must be >= 0");
      require(is_count(spec.param("max_iterations", 50)), spec, "max_iterations must be >= 1");
      require(spec.param("tolerance", 1e-8) > 0.0, spec, "tolerance must be > 0");
      break;
    case LearnerKind::TwoStage:
      require(spec.stages.size() == 2, spec, "two-stage learner needs a classifier and a regressor");
      for (const auto& stage : spec.stages) {
        require(stage.kind != LearnerKind::TwoStage, spec, "stages cannot nest");
        validate(stage);
      }
      break;
    case LearnerKind::Mean:
    case LearnerKind::OLS:
      break;
  }
  if (spec.kind != LearnerKind::TwoStage) {
    require(spec.stages.empty(), spec, "only TwoStage learners take stages");
  }
}

nlohmann::json spec_to_json(const LearnerSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["kind"] = to_string(spec.kind);
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : spec.hyperparameters) j["params"][k] = v;
  if (!spec.stages.empty()) {
    j["stages"] = nlohmann::json::array();
    for (const auto& s : spec.stages) j["stages"].push_back(spec_to_json(s));
  }
  return j;
}

LearnerSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("learner entry must be an object");
  LearnerSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("params")) {
      for (const auto& [k, v] : j.at("params").items()) {
        if (!v.is_number()) throw ConfigError("learner '" + s.name + "': parameter '" + k + "' must be numeric");
        s.hyperparameters[k] = v.get<double>();
      }
    }
    if (j.contains("stages")) {
      for (const auto& st : j.at("stages")) s.stages.push_back(spec_from_json(st));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed learner entry: ") + e.what());
  }
  validate(s);
  return s;
}

LearnerRegistry::LearnerRegistry(std::vector<LearnerSpec> specs) {
  for (auto& s : specs) add(std::move(s));
}

void LearnerRegistry::add(LearnerSpec spec) {
  validate(spec);
  for (const auto& existing : specs_) {
    if (existing.name == spec.name) throw ConfigError("duplicate learner name '" + spec.name + "'");
  }
  specs_.push_back(std::move(spec));
}

std::vector<std::string> LearnerRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (const auto& s : specs_) out.push_back(s.name);
  return out;
}

ClampRange default_clamp(const Vector& y) {
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  const double range = hi - lo;
  return {lo - range, hi + range};
}

FittedLearner::FittedLearner(LearnerSpec spec, std::size_t n_features, ClampRange clamp)
    : spec_(std::move(spec)), n_features_(n_features), clamp_(clamp) {}

Vector FittedLearner::predict(const Matrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != n_features_) {
    throw DataError("learner '" + spec_.name + "' expects " + std::to_string(n_features_) +
                    " features, got " + std::to_string(X.cols()));
  }
  Vector out(X.rows());
  predict_raw(X, out);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double v = out[i];
    if (!std::isfinite(v)) v = 0.5 * (clamp_.lo + clamp_.hi);
    out[i] = std::clamp(v, clamp_.lo, clamp_.hi);
  }
  return out;
}

nlohmann::json FittedLearner::to_json() const {
  nlohmann::json j;
  j["spec"] = spec_to_json(spec_);
  j["n_features"] = n_features_;
  j["clamp"] = {clamp_.lo, clamp_.hi};
  j["state"] = state_json();
  return j;
}

LearnerPtr learner_from_json(const nlohmann::json& j) {
  const LearnerSpec spec = spec_from_json(j.at("spec"));
  const auto p = j.at("n_features").get<std::size_t>();
  const ClampRange clamp{j.at("clamp").at(0).get<double>(), j.at("clamp").at(1).get<double>()};
  const auto& state = j.at("state");
  switch (spec.kind) {
    case LearnerKind::Mean:
      return detail::mean_from_json(spec, p, clamp, state);
    case LearnerKind::OLS:
    case LearnerKind::Ridge:
    case LearnerKind::Lasso:
      return detail::linear_from_json(spec, p, clamp, state);
    case LearnerKind::KNN:
      return detail::knn_from_json(spec, p, clamp, state);
    case LearnerKind::RegressionTree:
      return detail::tree_from_json(spec, p, clamp, state);
    case LearnerKind::RandomForest:
      return detail::forest_from_json(spec, p, clamp, state);
    case LearnerKind::LogisticGLM:
      return detail::logistic_from_json(spec, p, clamp, state);
    case LearnerKind::TwoStage:
      return detail::two_stage_from_json(spec, p, clamp, state);
  }
  throw ConfigError("unsupported learner kind in model file");
}

LearnerPtr fit(const LearnerSpec& spec, const Matrix& X, const Vector& y, std::uint64_t seed,
               FitLog* log) {
  validate(spec);
  ++g_fit_count;
  return detail::fit_uncounted(spec, X, y, seed, log);
}

LearnerPtr fit_two_stage(const LearnerSpec& classifier, const LearnerSpec& regressor,
                         const Matrix& X, const Vector& y, std::uint64_t seed, FitLog* log) {
  return fit(make_two_stage_spec("two_stage", classifier, regressor), X, y, seed, log);
}

std::uint64_t fit_count() { return g_fit_count.load(); }
void reset_fit_count() { g_fit_count = 0; }

namespace detail {

LearnerPtr fit_uncounted(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                         std::uint64_t seed, FitLog* log) {
  check_finite_design(X, y);
  if (X.rows() < 2) throw DataError("learner '" + spec.name + "' needs at least 2 observations");
  switch (spec.kind) {
    case LearnerKind::Mean:
      return fit_mean(spec, X, y);
    case LearnerKind::OLS:
      return fit_ols(spec, X, y, log);
    case LearnerKind::Ridge:
      return fit_ridge(spec, X, y);
    case LearnerKind::Lasso:
      return fit_lasso(spec, X, y, seed);
    case LearnerKind::KNN:
      return fit_knn(spec, X, y);
    case LearnerKind::RegressionTree:
      return fit_tree(spec, X, y);
    case LearnerKind::RandomForest:
      return fit_forest(spec, X, y, seed);
    case LearnerKind::LogisticGLM:
      return fit_logistic(spec, X, y, log);
    case LearnerKind::TwoStage:
      return fit_two_stage_uncounted(spec, X, y, seed, log);
  }
  throw ConfigError("unsupported learner kind");
}

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt((X.col(j).array() - s.mean[j]).square().mean());
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

std::vector<double> to_std_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

void record(FitLog* log, const LearnerSpec& spec, std::string message) {
  if (log) log->push_back({spec.name, -1, std::move(message)});
}

namespace {

class MeanModel final : public ModelBase {
 public:
  MeanModel(LearnerSpec spec, std::size_t p, ClampRange clamp, double mean)
      : ModelBase(std::move(spec), p, clamp), mean_(mean) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    out.setConstant(X.rows(), mean_);
  }
  nlohmann::json state_json() const override { return {{"mean", mean_}}; }

 private:
  double mean_;
};

}  // namespace

LearnerPtr fit_mean(const LearnerSpec& spec, const Matrix& X, const Vector& y) {
  return std::make_shared<MeanModel>(spec, static_cast<std::size_t>(X.cols()), default_clamp(y),
                                     y.mean());
}

LearnerPtr mean_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                          const nlohmann::json& state) {
  return std::make_shared<MeanModel>(spec, p, clamp, state.at("mean").get<double>());
}

}  // namespace detail
}  // namespace hubersl
