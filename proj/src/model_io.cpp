#include <stdexcept>

#include "hubersl/super_learner.hpp"

namespace hubersl {

namespace {
constexpr const char* kFormat = "hubersl-model";
constexpr int kVersion = 1;
}  // namespace

nlohmann::json model_to_json(const SuperLearnerModel& model) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["label"] = model.label;
  j["loss_mode"] = to_string(model.loss_mode);
  j["ensemble"] = to_string(model.ensemble);
  j["seed"] = model.seed;
  j["n_features"] = model.n_features;
  j["feature_names"] = model.feature_names;
  j["lambda"] = model.lambda ? nlohmann::json(*model.lambda) : nlohmann::json(nullptr);
  j["lambda_grid"] = model.lambda_grid;
  j["weights"] = std::vector<double>(model.weights.alpha().data(),
                                     model.weights.alpha().data() + model.weights.alpha().size());
  j["cv_mse"] = model.cv_mse;
  j["ensemble_cv_mse"] = model.ensemble_cv_mse;
  if (model.selection) {
    j["selection"] = {{"chosen_index", model.selection->chosen_index},
                      {"chosen_lambda", model.selection->chosen_lambda},
                      {"cv_mse", model.selection->cv_mse}};
  }
  auto& learners = j["learners"] = nlohmann::json::array();
  for (const auto& f : model.fits) learners.push_back(f->to_json());
  auto& log = j["log"] = nlohmann::json::array();
  for (const auto& e : model.log) log.push_back({{"learner", e.learner}, {"fold", e.fold}, {"message", e.message}});
  return j;
}

SuperLearnerModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw DataError("not a hubersl model document");
    const int version = j.at("version").get<int>();
    if (version != kVersion) throw DataError("unsupported model version " + std::to_string(version));
    SuperLearnerModel m;
    m.label = j.value("label", "");
    m.loss_mode = loss_mode_from_string(j.at("loss_mode").get<std::string>());
    m.ensemble = ensemble_mode_from_string(j.at("ensemble").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.feature_names = j.value("feature_names", std::vector<std::string>{});
    if (!j.at("lambda").is_null()) m.lambda = j.at("lambda").get<double>();
    m.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    const auto w = j.at("weights").get<std::vector<double>>();
    m.weights = SimplexWeights(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
    m.cv_mse = j.at("cv_mse").get<std::vector<double>>();
    m.ensemble_cv_mse = j.at("ensemble_cv_mse").get<double>();
    if (j.contains("selection")) {
      LambdaSelection s;
      s.chosen_index = j["selection"].at("chosen_index").get<std::size_t>();
      s.chosen_lambda = j["selection"].at("chosen_lambda").get<double>();
      s.cv_mse = j["selection"].at("cv_mse").get<std::vector<double>>();
      m.selection = std::move(s);
    }
    for (const auto& l : j.at("learners")) m.fits.push_back(learner_from_json(l));
    for (const auto& e : j.value("log", nlohmann::json::array())) {
      m.log.push_back({e.at("learner").get<std::string>(), e.at("fold").get<int>(), e.at("message").get<std::string>()});
    }
    if (m.fits.size() != m.weights.size()) throw DataError("model has " + std::to_string(m.fits.size()) +
                                                           " learners but " + std::to_string(m.weights.size()) + " weights");
    for (const auto& f : m.fits) {
      if (f->n_features() != m.n_features) throw DataError("learner feature count disagrees with the model");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace hubersl
