// drobust command line: train / evaluate / experiment / weights.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numeric failure.
// Results go to stdout, diagnostics to stderr.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drobust/drobust.hpp"

namespace {

namespace fs = std::filesystem;
using namespace drobust;

struct GlobalFlags {
  std::string out_dir = ".";
  std::optional<std::int64_t> seed;
  int threads = 1;
};

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

Dataset load_train_data(const ExperimentConfig& cfg) {
  if (cfg.data.synthetic) {
    auto [train, test] = synth_prior_shift(
        cfg.seed, cfg.data.synth.groups, cfg.data.synth.train_priors,
        cfg.data.synth.test_priors, cfg.data.synth.n_train,
        cfg.data.synth.n_test);
    (void)test;
    return detail::prepare_labels_and_groups(cfg.data, std::move(train));
  }
  return detail::prepare_labels_and_groups(cfg.data,
                                           load(cfg.data.path, cfg.data.format));
}

int cmd_train(const std::string& config_path, const GlobalFlags& flags) {
  ExperimentConfig cfg =
      parse_experiment_config(ConfigFile::parse_file(config_path));
  if (flags.seed.has_value()) cfg.seed = static_cast<std::uint64_t>(*flags.seed);
  if (cfg.objectives.size() != 1) {
    throw ConfigError("train: config must name exactly one objective");
  }
  ensure_out_dir(flags.out_dir);

  Dataset ds = load_train_data(cfg);
  if (cfg.data.standardize) {
    ds = apply_standardizer(ds, fit_standardizer(ds));
  }

  TrainConfig tc = cfg.trainer_for(cfg.objectives.front(),
                                   cfg.lambda_grid.front(), cfg.seed);
  nlohmann::json extra;
  if (cfg.lambda_grid.size() > 1) {
    const CrossValidationResult cv =
        cross_validate(tc, ds, cfg.lambda_grid, cfg.folds);
    tc.lambda = cv.chosen_lambda;
    extra["chosen_lambda"] = cv.chosen_lambda;
    extra["lambda_grid"] = cfg.lambda_grid;
    extra["lambda_scores"] = cv.scores;
    log_info("cross-validation chose lambda = " +
             std::to_string(cv.chosen_lambda));
  }

  const TrainReport report = train(tc, ds);
  save_model(report.params, join_path(flags.out_dir, "model.txt"));
  nlohmann::json j = to_json(report, tc);
  for (auto& [key, value] : extra.items()) j[key] = value;
  write_json_file(join_path(flags.out_dir, "train_report.json"), j);

  std::cout << "objective = " << objective_name(tc.objective) << "\n"
            << "lambda = " << format_double(tc.lambda) << "\n"
            << "epochs_run = " << report.epochs_run << "\n"
            << "converged = " << (report.converged ? "true" : "false") << "\n"
            << "final_objective = "
            << format_double(report.objective_trace.back()) << "\n"
            << "model = " << join_path(flags.out_dir, "model.txt") << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& format_name,
                 const std::string& grouping_text, bool subcategory_task,
                 const std::string& divergence_name_in, double delta,
                 const std::string& loss_name_in,
                 const std::string& config_path, const GlobalFlags& flags) {
  FDivergenceSpec spec;
  LossSpec surrogate{Loss::ZeroOne};
  GroupingSpec grouping = GroupingSpec::parse("by_class");
  DataFormat format = DataFormat::CSV;
  bool make_subcats = subcategory_task;

  if (!config_path.empty()) {
    // Test-side delta/divergence default to the training configuration.
    const ExperimentConfig cfg =
        parse_experiment_config(ConfigFile::parse_file(config_path));
    spec = cfg.divergence;
    surrogate = cfg.loss;
    grouping = cfg.data.grouping;
    format = cfg.data.format;
    make_subcats = make_subcats || cfg.data.subcategory_task;
  }
  if (!divergence_name_in.empty()) {
    spec.kind = parse_divergence(divergence_name_in);
  }
  if (delta >= 0.0) spec.delta = delta;
  if (!loss_name_in.empty()) surrogate.kind = parse_loss(loss_name_in);
  if (!grouping_text.empty()) grouping = GroupingSpec::parse(grouping_text);
  if (!format_name.empty()) format = parse_format(format_name);

  const ModelParams params = load_model(model_path);
  Dataset test = load(data_path, format);
  if (make_subcats) test = make_subcategory_task(test);
  if (!(grouping.mode == GroupingMode::BySubcategoryLabels && test.has_groups())) {
    test = apply_grouping(test, grouping);
  }
  if (test.dim != params.dim) {
    throw ConfigError("evaluate: model dim " + std::to_string(params.dim) +
                      " does not match data dim " + std::to_string(test.dim));
  }

  const RobustnessReport report = evaluate(params, test, spec, surrogate);
  ensure_out_dir(flags.out_dir);
  write_json_file(join_path(flags.out_dir, "robustness_report.json"),
                  to_json(report, spec));
  std::cout << to_key_value_block(report);
  return 0;
}

int cmd_experiment(const std::string& config_path, const GlobalFlags& flags) {
  ExperimentConfig cfg =
      parse_experiment_config(ConfigFile::parse_file(config_path));
  if (flags.seed.has_value()) cfg.seed = static_cast<std::uint64_t>(*flags.seed);
  ensure_out_dir(flags.out_dir);

  const ExperimentResult result = run_experiment(cfg, flags.threads);
  const std::string table = render_table(result);
  const std::string csv = render_csv(result);
  write_text_file(join_path(flags.out_dir, "experiment_table.txt"), table);
  write_text_file(join_path(flags.out_dir, "experiment_table.csv"), csv);
  std::cout << table;
  return 0;
}

int cmd_weights(const std::string& losses_path, const std::string& stats_path,
                const std::string& divergence_name_in, double delta,
                double tol, int max_iters, const GlobalFlags& flags) {
  FDivergenceSpec spec;
  spec.kind = parse_divergence(divergence_name_in);
  spec.delta = delta;

  GroupWeights solved;
  if (!losses_path.empty()) {
    std::ifstream in(losses_path);
    if (!in) throw ConfigError("cannot open losses file: " + losses_path);
    std::vector<double> losses;
    double v = 0.0;
    while (in >> v) losses.push_back(v);
    if (losses.empty()) throw ParseError("losses file is empty");
    solved = per_sample_weights(losses, spec, tol, max_iters);
  } else if (!stats_path.empty()) {
    // one "count,mean_loss" pair per line
    std::ifstream in(stats_path);
    if (!in) throw ConfigError("cannot open stats file: " + stats_path);
    GroupStats stats;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string text = detail::trim(line);
      if (text.empty()) continue;
      const auto fields = detail::split(text, ',');
      long count = 0;
      double mean_loss = 0.0;
      if (fields.size() != 2 || !detail::parse_integer(fields[0], count) ||
          !detail::parse_number(fields[1], mean_loss)) {
        throw ParseError("stats file: expected \"count,mean_loss\"", line_no);
      }
      stats.counts.push_back(count);
      stats.mean_losses.push_back(mean_loss);
    }
    if (stats.counts.empty()) throw ParseError("stats file is empty");
    solved = solve_weights(stats, spec, tol, max_iters);
  } else {
    throw ConfigError("weights: need --losses or --stats");
  }

  ensure_out_dir(flags.out_dir);
  write_json_file(join_path(flags.out_dir, "weights.json"), to_json(solved));
  std::cout << to_key_value_block(solved);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributionally robust linear classification"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalFlags flags;
  std::int64_t seed_flag = 0;
  app.add_option("--out", flags.out_dir, "output directory")
      ->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed_flag, "override config seed");
  app.add_option("--threads", flags.threads, "worker threads for repeats")
      ->capture_default_str();

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train one objective");
  train_cmd->add_option("--config", config_path, "experiment config file")
      ->required();

  std::string model_path, data_path, format_name, grouping_text;
  std::string divergence_flag, loss_flag, eval_config;
  bool subcategory_flag = false;
  double delta_flag = -1.0;
  auto* eval_cmd = app.add_subcommand("evaluate", "robustness report for a model");
  eval_cmd->add_option("--model", model_path, "model file")->required();
  eval_cmd->add_option("--data", data_path, "test data file")->required();
  eval_cmd->add_option("--format", format_name, "csv or libsvm");
  eval_cmd->add_option("--grouping", grouping_text,
                       "by_class | singleton | by_column:NAME | "
                       "by_subcategory_labels");
  eval_cmd->add_flag("--subcategory-task", subcategory_flag,
                     "apply the sub-category construction first");
  eval_cmd->add_option("--divergence", divergence_flag, "kl or pearson");
  eval_cmd->add_option("--delta", delta_flag, "uncertainty radius");
  eval_cmd->add_option("--loss", loss_flag, "surrogate loss to also report");
  eval_cmd->add_option("--config", eval_config,
                       "training config supplying defaults");

  std::string experiment_config;
  auto* exp_cmd = app.add_subcommand("experiment",
                                     "repeats x objectives comparison table");
  exp_cmd->add_option("--config", experiment_config, "experiment config file")
      ->required();

  std::string losses_path, stats_path, weights_divergence = "kl";
  double weights_delta = 0.5, weights_tol = 1e-10;
  int weights_max_iters = 200;
  auto* weights_cmd =
      app.add_subcommand("weights", "solve the inner weight problem");
  weights_cmd->add_option("--losses", losses_path,
                          "file of per-sample losses, one per line");
  weights_cmd->add_option("--stats", stats_path,
                          "file of count,mean_loss lines");
  weights_cmd->add_option("--divergence", weights_divergence, "kl or pearson")
      ->capture_default_str();
  weights_cmd->add_option("--delta", weights_delta, "uncertainty radius")
      ->capture_default_str();
  weights_cmd->add_option("--tol", weights_tol, "KL bisection tolerance")
      ->capture_default_str();
  weights_cmd->add_option("--max-iters", weights_max_iters,
                          "KL bisection iteration cap")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) flags.seed = seed_flag;

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, flags);
    if (eval_cmd->parsed()) {
      return cmd_evaluate(model_path, data_path, format_name, grouping_text,
                          subcategory_flag, divergence_flag, delta_flag,
                          loss_flag, eval_config, flags);
    }
    if (exp_cmd->parsed()) return cmd_experiment(experiment_config, flags);
    if (weights_cmd->parsed()) {
      return cmd_weights(losses_path, stats_path, weights_divergence,
                         weights_delta, weights_tol, weights_max_iters, flags);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
