#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hubersl/experiments.hpp"
#include "hubersl/super_learner.hpp"

namespace hubersl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Config document sections (all optional unless a command needs them):
///   seed          integer
///   learners      [{name, kind, params{}, stages[]}]; defaults to the experiment library
///   super_learner {V, loss_mode, ensemble, lambda, lambda_grid[], grid_size,
///                  grid_spacing, D, stratify_zero_folds}
///   meta          {max_iterations, tolerance}
///   scenario      cost: {kind: "cost", regime, n, n_test, x8_sd}
///                 tweedie: {kind: "tweedie", name, n, x8_sd}
///   experiment    {replications, estimators[], V, D, lambda_grid[], grid_size,
///                  grid_spacing, fluctuation, truth_draws, true_ate}
/// Unknown keys are rejected.
nlohmann::json parse_config_text(const std::string& text, const std::string& source);

SuperLearnerConfig super_learner_config_from_json(const nlohmann::json& config);
PredictionExperimentConfig prediction_config_from_json(const nlohmann::json& config);
AteExperimentConfig ate_config_from_json(const nlohmann::json& config);

/// Runs one subcommand (fit, predict, simulate, ate, report). `args` excludes
/// the program name. Returns 0, 2 for configuration errors, 3 for data errors.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hubersl
