#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "drobust/data.hpp"
#include "drobust/divergences.hpp"
#include "drobust/errors.hpp"
#include "drobust/losses.hpp"
#include "drobust/trainer.hpp"

namespace drobust {

/// Flat "key = value" configuration with [section] headers. Lines starting
/// with '#' or ';' are comments.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string text = detail::trim(line);
      if (text.empty() || text[0] == '#' || text[0] == ';') continue;
      if (text.front() == '[') {
        if (text.back() != ']') {
          throw ParseError("config: unterminated section header", line_no);
        }
        section = detail::trim(text.substr(1, text.size() - 2));
        continue;
      }
      const std::size_t eq = text.find('=');
      if (eq == std::string::npos) {
        throw ParseError("config: expected key = value, got \"" + text + "\"",
                         line_no);
      }
      const std::string key = detail::trim(text.substr(0, eq));
      const std::string value = detail::trim(text.substr(eq + 1));
      if (key.empty()) throw ParseError("config: empty key", line_no);
      cfg.values_[section][key] = value;
    }
    return cfg;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto sit = values_.find(section);
    return sit != values_.end() && sit->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key) const {
    const auto sit = values_.find(section);
    if (sit != values_.end()) {
      const auto kit = sit->second.find(key);
      if (kit != sit->second.end()) return kit->second;
    }
    throw ConfigError("config: missing [" + section + "] " + key);
  }

  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    double out = 0.0;
    if (!detail::parse_number(get(section, key), out)) {
      throw ConfigError("config: [" + section + "] " + key +
                        " is not a number");
    }
    return out;
  }

  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  long get_int(const std::string& section, const std::string& key) const {
    long out = 0;
    if (!detail::parse_integer(get(section, key), out)) {
      throw ConfigError("config: [" + section + "] " + key +
                        " is not an integer");
    }
    return out;
  }

  long get_int_or(const std::string& section, const std::string& key,
                  long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: [" + section + "] " + key +
                      " is not a boolean");
  }

  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key) const {
    std::vector<std::string> out;
    for (const std::string& item : detail::split(get(section, key), ',')) {
      const std::string t = detail::trim(item);
      if (!t.empty()) out.push_back(t);
    }
    if (out.empty()) {
      throw ConfigError("config: [" + section + "] " + key + " is empty");
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : get_list(section, key)) {
      double v = 0.0;
      if (!detail::parse_number(item, v)) {
        throw ConfigError("config: [" + section + "] " + key +
                          " contains non-numeric entry \"" + item + "\"");
      }
      out.push_back(v);
    }
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

/// Synthetic prior-shift source described inline in a config file: one
/// Gaussian class per latent category, labels equal to category ids.
struct SyntheticSpec {
  std::vector<GroupModel> groups;
  std::vector<double> train_priors;
  std::vector<double> test_priors;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Where an experiment's data comes from: a file, or the generator.
struct DataSource {
  std::string path;
  DataFormat format = DataFormat::CSV;
  bool synthetic = false;
  SyntheticSpec synth;

  GroupingSpec grouping;
  bool subcategory_task = false;
  bool standardize = false;
};

struct ExperimentConfig {
  DataSource data;
  std::vector<Objective> objectives;
  FDivergenceSpec divergence;
  LossSpec loss;
  std::vector<double> lambda_grid;
  int folds = 5;
  double split_fraction = 0.8;
  int repeats = 10;
  std::uint64_t seed = 0;
  double learning_rate = 1.0;
  int max_epochs = 500;
  double grad_tol = 1e-6;

  TrainConfig trainer_for(Objective objective, double lambda,
                          std::uint64_t run_seed) const {
    TrainConfig tc;
    tc.objective = objective;
    tc.divergence = divergence;
    tc.loss = loss;
    tc.lambda = lambda;
    tc.learning_rate = learning_rate;
    tc.max_epochs = max_epochs;
    tc.grad_tol = grad_tol;
    tc.seed = run_seed;
    return tc;
  }
};

namespace detail {

inline SyntheticSpec parse_synthetic(const ConfigFile& cfg) {
  SyntheticSpec spec;
  spec.train_priors = cfg.get_double_list("data", "train_priors");
  spec.test_priors = cfg.get_double_list("data", "test_priors");
  spec.n_train = static_cast<std::size_t>(cfg.get_int("data", "n_train"));
  spec.n_test = static_cast<std::size_t>(cfg.get_int("data", "n_test"));
  const double stddev = cfg.get_double_or("data", "stddev", 1.0);

  // means = 0 0 ; 3 0   (one vector per latent category)
  std::vector<GroupModel> groups;
  for (const std::string& part : split(cfg.get("data", "means"), ';')) {
    GaussianComponent comp;
    std::istringstream fields(part);
    double v = 0.0;
    while (fields >> v) comp.mean.push_back(v);
    if (comp.mean.empty()) {
      throw ConfigError("config: [data] means has an empty group entry");
    }
    comp.stddev = stddev;
    comp.label = static_cast<int>(groups.size());
    GroupModel gm;
    gm.components.push_back(std::move(comp));
    groups.push_back(std::move(gm));
  }
  spec.groups = std::move(groups);
  if (spec.groups.size() != spec.train_priors.size()) {
    throw ConfigError("config: [data] means and train_priors disagree on the "
                      "number of groups");
  }
  return spec;
}

}  // namespace detail

inline DataSource parse_data_source(const ConfigFile& cfg) {
  DataSource src;
  if (cfg.get_or("data", "synthetic", "") == "prior_shift") {
    src.synthetic = true;
    src.synth = detail::parse_synthetic(cfg);
    src.grouping = GroupingSpec::parse(cfg.get_or("data", "grouping", "by_class"));
  } else {
    src.path = cfg.get("data", "path");
    src.format = parse_format(cfg.get_or("data", "format", "csv"));
    src.grouping = GroupingSpec::parse(cfg.get_or("data", "grouping", "by_class"));
  }
  src.subcategory_task = cfg.get_bool_or("data", "subcategory_task", false);
  src.standardize = cfg.get_bool_or("data", "standardize", false);
  return src;
}

inline ExperimentConfig parse_experiment_config(const ConfigFile& cfg) {
  ExperimentConfig ec;
  ec.data = parse_data_source(cfg);

  std::vector<std::string> names;
  if (cfg.has("train", "objectives")) {
    names = cfg.get_list("train", "objectives");
  } else {
    names.push_back(cfg.get_or("train", "objective", "erm"));
  }
  for (const std::string& name : names) {
    ec.objectives.push_back(parse_objective(name));
  }

  ec.divergence.kind = parse_divergence(cfg.get_or("train", "divergence", "kl"));
  ec.divergence.delta = cfg.get_double_or("train", "delta", 0.5);
  if (!(ec.divergence.delta >= 0.0)) {
    throw ConfigError("config: [train] delta must be >= 0");
  }
  ec.loss.kind = parse_loss(cfg.get_or("train", "loss", "softmax_ce"));
  if (cfg.has("train", "lambda_grid")) {
    ec.lambda_grid = cfg.get_double_list("train", "lambda_grid");
  } else {
    ec.lambda_grid = {cfg.get_double_or("train", "lambda", 0.0)};
  }
  ec.folds = static_cast<int>(cfg.get_int_or("train", "folds", 5));
  ec.learning_rate = cfg.get_double_or("train", "learning_rate", 1.0);
  ec.max_epochs = static_cast<int>(cfg.get_int_or("train", "max_epochs", 500));
  ec.grad_tol = cfg.get_double_or("train", "grad_tol", 1e-6);
  ec.seed = static_cast<std::uint64_t>(cfg.get_int_or("train", "seed", 0));

  ec.split_fraction =
      cfg.get_double_or("experiment", "split_fraction", 0.8);
  if (!(ec.split_fraction > 0.0 && ec.split_fraction < 1.0)) {
    throw ConfigError("config: [experiment] split_fraction must be in (0, 1)");
  }
  ec.repeats = static_cast<int>(cfg.get_int_or("experiment", "repeats", 10));
  if (ec.repeats < 1) {
    throw ConfigError("config: [experiment] repeats must be >= 1");
  }
  return ec;
}

}  // namespace drobust
