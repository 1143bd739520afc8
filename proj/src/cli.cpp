#include "hubersl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "hubersl/csv.hpp"
#include "hubersl/parallel.hpp"
#include "hubersl/report.hpp"

namespace hubersl {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& section) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.contains(k)) throw ConfigError("unknown key '" + k + "' in " + section);
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& section) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + " has the wrong type");
  }
}

const json& section(const json& config, const std::string& name) {
  static const json kEmpty = json::object();
  return config.contains(name) ? config.at(name) : kEmpty;
}

GridSpacing spacing_from_string(const std::string& s) {
  if (s == "log") return GridSpacing::Log;
  if (s == "linear") return GridSpacing::Linear;
  throw ConfigError("grid_spacing must be 'log' or 'linear'");
}

LearnerRegistry learners_from_json(const json& config) {
  if (!config.contains("learners")) return default_experiment_library();
  const json& list = config.at("learners");
  if (!list.is_array() || list.empty()) throw ConfigError("'learners' must be a nonempty array");
  LearnerRegistry r;
  for (const auto& entry : list) {
    check_keys(entry, {"name", "kind", "params", "stages"}, "learner entry");
    r.add(spec_from_json(entry));
  }
  return r;
}

MetaSolveOptions meta_from_json(const json& config) {
  const json& m = section(config, "meta");
  check_keys(m, {"max_iterations", "tolerance"}, "meta");
  MetaSolveOptions o;
  o.max_iterations = get_or<int>(m, "max_iterations", o.max_iterations, "meta");
  o.relative_objective_tolerance = get_or<double>(m, "tolerance", o.relative_objective_tolerance, "meta");
  validate(o);
  return o;
}

std::uint64_t seed_from_json(const json& config) { return get_or<std::uint64_t>(config, "seed", 1, "config"); }

const std::set<std::string> kTopLevel{"seed", "learners", "super_learner", "meta", "scenario", "experiment"};

FamilyConfig family_from_json(const json& config, std::vector<Estimator> default_estimators) {
  const json& e = section(config, "experiment");
  check_keys(e, {"replications", "estimators", "V", "D", "lambda_grid", "grid_size", "grid_spacing", "fluctuation",
                 "truth_draws", "true_ate", "workers"},
             "experiment");
  FamilyConfig f;
  f.learners = learners_from_json(config);
  f.V = get_or<std::size_t>(e, "V", f.V, "experiment");
  f.D = get_or<std::size_t>(e, "D", f.D, "experiment");
  f.lambda_grid = get_or<std::vector<double>>(e, "lambda_grid", {}, "experiment");
  f.grid_size = get_or<std::size_t>(e, "grid_size", f.grid_size, "experiment");
  f.grid_spacing = spacing_from_string(get_or<std::string>(e, "grid_spacing", "log", "experiment"));
  f.meta = meta_from_json(config);
  f.estimators = std::move(default_estimators);
  if (e.contains("estimators")) {
    f.estimators.clear();
    for (const auto& s : get_or<std::vector<std::string>>(e, "estimators", {}, "experiment")) {
      f.estimators.push_back(estimator_from_string(s));
    }
  }
  if (!f.lambda_grid.empty()) {
    try {
      LambdaGrid g(f.lambda_grid);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
  }
  return f;
}

}  // namespace

json parse_config_text(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  check_keys(j, kTopLevel, "config");
  return j;
}

SuperLearnerConfig super_learner_config_from_json(const json& config) {
  check_keys(config, kTopLevel, "config");
  const json& s = section(config, "super_learner");
  check_keys(s, {"V", "loss_mode", "ensemble", "lambda", "lambda_grid", "grid_size", "grid_spacing", "D",
                 "stratify_zero_folds"},
             "super_learner");
  SuperLearnerConfig c;
  c.learners = learners_from_json(config);
  c.V = get_or<std::size_t>(s, "V", c.V, "super_learner");
  c.loss_mode = loss_mode_from_string(get_or<std::string>(s, "loss_mode", "standard", "super_learner"));
  c.ensemble = ensemble_mode_from_string(get_or<std::string>(s, "ensemble", "convex", "super_learner"));
  c.fixed_lambda = get_or<double>(s, "lambda", 0.0, "super_learner");
  c.lambda_grid = get_or<std::vector<double>>(s, "lambda_grid", {}, "super_learner");
  c.grid_size = get_or<std::size_t>(s, "grid_size", c.grid_size, "super_learner");
  c.grid_spacing = spacing_from_string(get_or<std::string>(s, "grid_spacing", "log", "super_learner"));
  c.D = get_or<std::size_t>(s, "D", c.D, "super_learner");
  c.stratify_zero_folds = get_or<bool>(s, "stratify_zero_folds", false, "super_learner");
  c.seed = seed_from_json(config);
  c.meta = meta_from_json(config);
  validate(c);
  return c;
}

PredictionExperimentConfig prediction_config_from_json(const json& config) {
  check_keys(config, kTopLevel, "config");
  const json& sc = section(config, "scenario");
  check_keys(sc, {"kind", "regime", "n", "n_test", "x8_sd"}, "scenario");
  if (get_or<std::string>(sc, "kind", "cost", "scenario") != "cost") {
    throw ConfigError("simulate needs a cost scenario (scenario.kind = \"cost\")");
  }
  PredictionExperimentConfig c;
  CostScenario cost;
  cost.regime = outlier_regime_from_string(get_or<std::string>(sc, "regime", "high", "scenario"));
  cost.n = get_or<std::size_t>(sc, "n", 250, "scenario");
  CovariateSpec cov;
  cov.x8_sd = get_or<double>(sc, "x8_sd", cov.x8_sd, "scenario");
  c.scenario = to_string(cost.regime) + "-n" + std::to_string(cost.n);
  c.generator = cost_generator(cost, cov);
  c.n_train = cost.n;
  c.n_test = get_or<std::size_t>(sc, "n_test", c.n_test, "scenario");
  c.family = family_from_json(config, all_estimators());
  c.replications = get_or<std::size_t>(section(config, "experiment"), "replications", c.replications, "experiment");
  c.workers = get_or<std::size_t>(section(config, "experiment"), "workers", default_workers(), "experiment");
  c.seed = seed_from_json(config);
  if (c.replications == 0) throw ConfigError("experiment.replications must be >= 1");
  return c;
}

AteExperimentConfig ate_config_from_json(const json& config) {
  check_keys(config, kTopLevel, "config");
  const json& sc = section(config, "scenario");
  check_keys(sc, {"kind", "name", "n", "x8_sd"}, "scenario");
  if (get_or<std::string>(sc, "kind", "tweedie", "scenario") != "tweedie") {
    throw ConfigError("ate needs a tweedie scenario (scenario.kind = \"tweedie\")");
  }
  AteExperimentConfig c = default_ate_config();
  c.scenario = TweedieScenario::by_name(get_or<std::string>(sc, "name", "medium", "scenario"));
  c.n = get_or<std::size_t>(sc, "n", c.n, "scenario");
  c.covariates.x8_sd = get_or<double>(sc, "x8_sd", c.covariates.x8_sd, "scenario");
  c.family = family_from_json(config, c.family.estimators);
  const json& e = section(config, "experiment");
  c.replications = get_or<std::size_t>(e, "replications", c.replications, "experiment");
  c.fluctuation = fluctuation_from_string(get_or<std::string>(e, "fluctuation", "linear", "experiment"));
  c.truth_draws = get_or<std::size_t>(e, "truth_draws", c.truth_draws, "experiment");
  if (e.contains("true_ate")) c.true_ate = get_or<double>(e, "true_ate", 0.0, "experiment");
  c.workers = get_or<std::size_t>(e, "workers", default_workers(), "experiment");
  c.seed = seed_from_json(config);
  if (c.replications == 0) throw ConfigError("experiment.replications must be >= 1");
  return c;
}

namespace {

std::string predictions_csv(const Vector& pred) {
  CsvTable t;
  t.header = {"prediction"};
  for (Eigen::Index i = 0; i < pred.size(); ++i) t.rows.push_back({format_double(pred[i])});
  return to_csv_string(t);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text, path);
}

void write_manifest(const std::string& out_path, const RunManifest& m) {
  write_file_atomic(out_path + ".manifest.json", m.to_json().dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust Huber-loss super learner toolkit", "hubersl"};
  app.require_subcommand(1, 1);

  std::string data_path, outcome = "y", config_path, model_path, out_path, in_sample_out, rows_out, in_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::size_t> reps_override;
  std::optional<std::size_t> workers_override;

  auto* fit_cmd = app.add_subcommand("fit", "Fit a super learner on a CSV and save the model as JSON");
  fit_cmd->add_option("--data", data_path, "Training CSV with a header row")->required();
  fit_cmd->add_option("--outcome", outcome, "Outcome column name");
  fit_cmd->add_option("--config", config_path, "JSON config");
  fit_cmd->add_option("--model", model_path, "Output model JSON")->required();
  fit_cmd->add_option("--in-sample-out", in_sample_out, "Optional CSV of in-sample predictions");
  fit_cmd->add_option("--seed", seed_override, "Override the config seed");

  auto* predict_cmd = app.add_subcommand("predict", "Predict with a saved model");
  predict_cmd->add_option("--model", model_path, "Model JSON")->required();
  predict_cmd->add_option("--data", data_path, "CSV containing the model's feature columns")->required();
  predict_cmd->add_option("--out", out_path, "Output predictions CSV")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Run the cost prediction experiment");
  auto* ate_cmd = app.add_subcommand("ate", "Run the TMLE treatment-effect experiment");
  for (auto* cmd : {sim_cmd, ate_cmd}) {
    cmd->add_option("--config", config_path, "JSON config");
    cmd->add_option("--out", out_path, "Output report CSV (a .manifest.json sidecar is written next to it)")->required();
    cmd->add_option("--rows-out", rows_out, "Optional per-replication CSV");
    cmd->add_option("--replications", reps_override, "Override experiment.replications");
    cmd->add_option("--seed", seed_override, "Override the config seed");
    cmd->add_option("--workers", workers_override, "Replications run in parallel");
  }

  auto* report_cmd = app.add_subcommand("report", "Render a report CSV as Markdown");
  report_cmd->add_option("--in", in_path, "Report CSV")->required();
  report_cmd->add_option("--out", out_path, "Output Markdown (stdout when omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    if (fit_cmd->parsed()) {
      json config = load_config(config_path);
      if (seed_override) config["seed"] = *seed_override;
      const SuperLearnerConfig slc = super_learner_config_from_json(config);
      const Dataset data = dataset_from_csv(read_csv_file(data_path), outcome);
      const SuperLearnerModel model = fit_super_learner(data, slc);
      write_file_atomic(model_path, model_to_json(model).dump() + "\n");
      if (!in_sample_out.empty()) write_file_atomic(in_sample_out, predictions_csv(predict_super_learner(model, data.X)));
      for (const auto& e : model.log) err << "note: " << e.learner << (e.fold >= 0 ? " fold " + std::to_string(e.fold) : "") << ": " << e.message << "\n";
      out << "fitted " << model.fits.size() << " learners; weights";
      for (std::size_t k = 0; k < model.weights.size(); ++k) out << ' ' << model.learner_names()[k] << '=' << model.weights[k];
      if (model.lambda) out << "; lambda " << *model.lambda;
      out << "\n";
    } else if (predict_cmd->parsed()) {
      json doc;
      try {
        doc = json::parse(read_file(model_path));
      } catch (const json::parse_error& e) {
        throw DataError(model_path + ": invalid JSON: " + e.what());
      }
      const SuperLearnerModel model = model_from_json(doc);
      const CsvTable table = read_csv_file(data_path);
      if (model.feature_names.size() != model.n_features) throw DataError("model does not record its feature names");
      const Matrix X = features_from_csv(table, model.feature_names);
      write_file_atomic(out_path, predictions_csv(predict_super_learner(model, X)));
    } else if (sim_cmd->parsed() || ate_cmd->parsed()) {
      json config = load_config(config_path);
      if (seed_override) config["seed"] = *seed_override;
      if (reps_override) config["experiment"]["replications"] = *reps_override;
      RunManifest manifest;
      manifest.config_digest = config_digest(config);
      Report report;
      CsvTable rows;
      if (sim_cmd->parsed()) {
        PredictionExperimentConfig pc = prediction_config_from_json(config);
        if (workers_override) pc.workers = *workers_override;
        const PredictionReport r = run_prediction_experiment(pc);
        report = r.to_report();
        rows.header = {"replication", "estimator", "mse", "mae", "r2", "lambda"};
        for (const auto& row : r.rows) {
          rows.rows.push_back({std::to_string(row.replication), row.estimator, format_double(row.scores.mse),
                               format_double(row.scores.mae), format_double(row.scores.r2),
                               row.lambda ? format_double(*row.lambda) : ""});
        }
        manifest.seed = pc.seed;
        manifest.replications = pc.replications;
        manifest.failed_replications = r.failures.size();
        for (const auto& f : r.failures) err << "warning: " << f << "\n";
      } else {
        AteExperimentConfig ac = ate_config_from_json(config);
        if (workers_override) ac.workers = *workers_override;
        const AteReport r = run_ate_experiment(ac);
        report = r.to_report();
        rows.header = {"replication", "estimator", "estimate", "epsilon", "score"};
        for (const auto& row : r.rows) {
          rows.rows.push_back({std::to_string(row.replication), row.estimator, format_double(row.estimate),
                               format_double(row.epsilon), format_double(row.score)});
        }
        manifest.seed = ac.seed;
        manifest.replications = ac.replications;
        manifest.failed_replications = r.failures.size();
        for (const auto& f : r.failures) err << "warning: " << f << "\n";
      }
      write_file_atomic(out_path, to_csv_string(report_to_csv(report)));
      if (!rows_out.empty()) write_file_atomic(rows_out, to_csv_string(rows));
      manifest.elapsed_seconds = seconds_since(t0);
      write_manifest(out_path, manifest);
      out << "wrote " << out_path << "\n";
    } else if (report_cmd->parsed()) {
      const std::string md = render_markdown(report_from_csv(read_csv_file(in_path)));
      if (out_path.empty()) {
        out << md;
      } else {
        write_file_atomic(out_path, md);
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

}  // namespace hubersl
