#include "hubersl/learners.hpp"
#include "internal.hpp"

#include "hubersl/rng.hpp"

namespace hubersl::detail {

namespace {

enum class TwoStageMode { Composite, RegressorOnly, MeanOnly };

class TwoStageModel final : public ModelBase {
 public:
  TwoStageModel(LearnerSpec spec, std::size_t p, ClampRange clamp, TwoStageMode mode,
                LearnerPtr classifier, LearnerPtr regressor)
      : ModelBase(std::move(spec), p, clamp),
        mode_(mode),
        classifier_(std::move(classifier)),
        regressor_(std::move(regressor)) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    out = regressor_->predict(X);
    if (mode_ == TwoStageMode::Composite) {
      const Vector prob = classifier_->predict(X).cwiseMax(0.0).cwiseMin(1.0);
      out = out.cwiseProduct(prob);
    }
  }

  nlohmann::json state_json() const override {
    nlohmann::json j;
    j["mode"] = static_cast<int>(mode_);
    j["regressor"] = regressor_->to_json();
    if (classifier_) j["classifier"] = classifier_->to_json();
    return j;
  }

 private:
  TwoStageMode mode_;
  LearnerPtr classifier_;
  LearnerPtr regressor_;
};

}  // namespace

LearnerPtr fit_two_stage_uncounted(const LearnerSpec& spec, const Matrix& X, const Vector& y,
                                   std::uint64_t seed, FitLog* log) {
  if ((y.array() < 0.0).any()) {
    throw DataError("learner '" + spec.name + "': two-stage model needs nonnegative outcomes");
  }
  const auto p = static_cast<std::size_t>(X.cols());
  const ClampRange clamp = default_clamp(y);
  std::vector<std::size_t> positive;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0) positive.push_back(static_cast<std::size_t>(i));
  }
  const auto n = static_cast<std::size_t>(y.size());
  const LearnerSpec& classifier_spec = spec.stages.at(0);
  const LearnerSpec& regressor_spec = spec.stages.at(1);

  if (positive.empty()) {
    record(log, spec, "no positive outcomes; mean learner");
    return std::make_shared<TwoStageModel>(spec, p, clamp, TwoStageMode::MeanOnly, nullptr,
                                           fit_mean(regressor_spec, X, y));
  }
  if (positive.size() == n) {
    record(log, spec, "no zero outcomes; stage-2 model alone");
    return std::make_shared<TwoStageModel>(
        spec, p, clamp, TwoStageMode::RegressorOnly, nullptr,
        fit_uncounted(regressor_spec, X, y, derive_seed(seed, {2}), log));
  }

  Vector indicator = (y.array() > 0.0).cast<double>();
  LearnerPtr classifier = fit_uncounted(classifier_spec, X, indicator, derive_seed(seed, {1}), log);
  LearnerPtr regressor;
  if (positive.size() < 2) {
    record(log, spec, "fewer than two positive outcomes; stage-2 mean");
    regressor = fit_mean(regressor_spec, select_rows(X, positive), select_rows(y, positive));
  } else {
    regressor = fit_uncounted(regressor_spec, select_rows(X, positive), select_rows(y, positive),
                              derive_seed(seed, {2}), log);
  }
  return std::make_shared<TwoStageModel>(spec, p, clamp, TwoStageMode::Composite,
                                         std::move(classifier), std::move(regressor));
}

LearnerPtr two_stage_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                               const nlohmann::json& state) {
  const auto mode = static_cast<TwoStageMode>(state.at("mode").get<int>());
  LearnerPtr classifier = state.contains("classifier") ? learner_from_json(state.at("classifier")) : nullptr;
  return std::make_shared<TwoStageModel>(spec, p, clamp, mode, std::move(classifier),
                                         learner_from_json(state.at("regressor")));
}

}  // namespace hubersl::detail
