#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "drobust/config.hpp"
#include "drobust/data.hpp"
#include "drobust/linear_model.hpp"
#include "drobust/log.hpp"
#include "drobust/metrics.hpp"
#include "drobust/trainer.hpp"

namespace drobust {

/// One objective's risks across the experiment repeats.
struct ObjectiveOutcome {
  Objective objective = Objective::ERM;
  std::vector<double> ordinary;        // per repeat
  std::vector<double> structural_adv;  // per repeat
  std::vector<double> chosen_lambdas;  // per repeat

  double mean(const std::vector<double>& xs) const {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
  }
  double stddev(const std::vector<double>& xs) const {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
};

struct ExperimentResult {
  std::vector<ObjectiveOutcome> outcomes;  // one per objective, config order
  int repeats = 0;
};

namespace detail {

/// Label surgery and grouping, applied before any splitting.
inline Dataset prepare_labels_and_groups(const DataSource& src, Dataset ds) {
  if (src.subcategory_task) ds = make_subcategory_task(ds);
  if (!(src.grouping.mode == GroupingMode::BySubcategoryLabels &&
        ds.has_groups())) {
    ds = apply_grouping(ds, src.grouping);
  }
  return ds;
}

inline std::pair<Dataset, Dataset> repeat_splits(const ExperimentConfig& cfg,
                                                 const Dataset* full,
                                                 std::uint64_t repeat_seed) {
  std::pair<Dataset, Dataset> splits;
  if (cfg.data.synthetic) {
    auto [train, test] = synth_prior_shift(
        repeat_seed, cfg.data.synth.groups, cfg.data.synth.train_priors,
        cfg.data.synth.test_priors, cfg.data.synth.n_train,
        cfg.data.synth.n_test);
    splits = {prepare_labels_and_groups(cfg.data, std::move(train)),
              prepare_labels_and_groups(cfg.data, std::move(test))};
  } else {
    splits = train_test_split(*full, cfg.split_fraction, repeat_seed);
  }
  if (cfg.data.standardize) {
    // fitted on the training split only
    const FeatureScaling scaling = fit_standardizer(splits.first);
    splits.first = apply_standardizer(splits.first, scaling);
    splits.second = apply_standardizer(splits.second, scaling);
  }
  return splits;
}

struct RepeatOutcome {
  std::vector<double> ordinary;        // per objective
  std::vector<double> structural_adv;  // per objective
  std::vector<double> chosen_lambda;   // per objective
};

inline RepeatOutcome run_repeat(const ExperimentConfig& cfg,
                                const Dataset* full, int repeat) {
  const std::uint64_t repeat_seed = cfg.seed + static_cast<std::uint64_t>(repeat);
  auto [train_ds, test_ds] = repeat_splits(cfg, full, repeat_seed);

  RepeatOutcome outcome;
  for (Objective objective : cfg.objectives) {
    TrainConfig tc = cfg.trainer_for(objective, cfg.lambda_grid.front(),
                                     repeat_seed);
    double lambda = cfg.lambda_grid.front();
    if (cfg.lambda_grid.size() > 1) {
      lambda = cross_validate(tc, train_ds, cfg.lambda_grid, cfg.folds)
                   .chosen_lambda;
    }
    tc.lambda = lambda;
    const TrainReport fit = train(tc, train_ds);
    const RobustnessReport report =
        evaluate(fit.params, test_ds, cfg.divergence);
    outcome.ordinary.push_back(report.ordinary_risk);
    outcome.structural_adv.push_back(report.structural_adv_risk_01);
    outcome.chosen_lambda.push_back(lambda);
    log_info("repeat " + std::to_string(repeat) + " " +
             objective_name(objective) + ": ordinary " +
             std::to_string(report.ordinary_risk) + ", structural " +
             std::to_string(report.structural_adv_risk_01));
  }
  return outcome;
}

}  // namespace detail

/// Repeats x objectives runner. Each repeat draws its own train/test split
/// (or synthetic sample) from a seed derived as seed + repeat. Repeats may
/// run on a worker pool; results land in per-repeat slots so the assembled
/// output is independent of scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       int threads = 1) {
  Dataset full;
  const Dataset* full_ptr = nullptr;
  if (!cfg.data.synthetic) {
    full = detail::prepare_labels_and_groups(cfg.data,
                                             load(cfg.data.path, cfg.data.format));
    full_ptr = &full;
  }

  std::vector<detail::RepeatOutcome> slots(cfg.repeats);
  std::vector<std::string> failures(cfg.repeats);
  const int workers = std::max(1, std::min(threads, cfg.repeats));
  if (workers == 1) {
    for (int r = 0; r < cfg.repeats; ++r) {
      try {
        slots[r] = detail::run_repeat(cfg, full_ptr, r);
      } catch (const std::exception& e) {
        throw Error("experiment: repeat " + std::to_string(r) +
                    " failed: " + e.what());
      }
    }
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t r;
          {
            std::lock_guard<std::mutex> guard(mu);
            if (next >= slots.size()) return;
            r = next++;
          }
          try {
            slots[r] = detail::run_repeat(cfg, full_ptr, static_cast<int>(r));
          } catch (const std::exception& e) {
            failures[r] = e.what();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (int r = 0; r < cfg.repeats; ++r) {
      if (!failures[r].empty()) {
        throw Error("experiment: repeat " + std::to_string(r) +
                    " failed: " + failures[r]);
      }
    }
  }

  ExperimentResult result;
  result.repeats = cfg.repeats;
  result.outcomes.resize(cfg.objectives.size());
  for (std::size_t o = 0; o < cfg.objectives.size(); ++o) {
    result.outcomes[o].objective = cfg.objectives[o];
    for (int r = 0; r < cfg.repeats; ++r) {
      result.outcomes[o].ordinary.push_back(slots[r].ordinary[o]);
      result.outcomes[o].structural_adv.push_back(slots[r].structural_adv[o]);
      result.outcomes[o].chosen_lambdas.push_back(slots[r].chosen_lambda[o]);
    }
  }
  return result;
}

/// Human-readable comparison table: rows are objectives, columns the two
/// estimated risks as mean (std) over repeats.
inline std::string render_table(const ExperimentResult& result) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "objective" << std::setw(24)
      << "ordinary_risk" << std::setw(24) << "structural_adv_risk" << "\n";
  for (const auto& oc : result.outcomes) {
    std::ostringstream ord, sadv;
    ord << std::fixed << std::setprecision(4) << oc.mean(oc.ordinary) << " ("
        << std::setprecision(4) << oc.stddev(oc.ordinary) << ")";
    sadv << std::fixed << std::setprecision(4) << oc.mean(oc.structural_adv)
         << " (" << std::setprecision(4) << oc.stddev(oc.structural_adv)
         << ")";
    out << std::left << std::setw(18) << objective_name(oc.objective)
        << std::setw(24) << ord.str() << std::setw(24) << sadv.str() << "\n";
  }
  out << "(" << result.repeats << " repeats)\n";
  return out.str();
}

inline std::string render_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "objective,ordinary_risk_mean,ordinary_risk_std,"
         "structural_adv_risk_mean,structural_adv_risk_std,repeats\n";
  for (const auto& oc : result.outcomes) {
    out << objective_name(oc.objective) << ","
        << format_double(oc.mean(oc.ordinary)) << ","
        << format_double(oc.stddev(oc.ordinary)) << ","
        << format_double(oc.mean(oc.structural_adv)) << ","
        << format_double(oc.stddev(oc.structural_adv)) << "," << result.repeats
        << "\n";
  }
  return out.str();
}

}  // namespace drobust
