#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drobust/adversary.hpp"
#include "drobust/data.hpp"
#include "drobust/divergences.hpp"
#include "drobust/linear_model.hpp"
#include "drobust/losses.hpp"

namespace drobust {

/// Held-out robustness metrics. The three risks nest:
/// ordinary <= structural adversarial <= adversarial 0-1, because w = 1 is
/// always feasible and the singleton grouping refines any grouping.
struct RobustnessReport {
  double ordinary_risk = 0.0;
  double adversarial_01_risk = 0.0;
  double structural_adv_risk_01 = 0.0;
  std::optional<double> structural_adv_risk_surrogate;
  std::vector<double> per_group_risks;  // 0-1 risk per latent category
  std::vector<std::int64_t> group_counts;
  double sensitivity = 0.0;  // sqrt(sum_z p_z (R_z - R)^2)
  GroupWeights weights_certificate;  // from the structural 0-1 solve
};

namespace detail {

inline GroupStats stats_from(std::span<const double> sample_losses,
                             const Dataset& ds) {
  GroupStats stats;
  const int group_count = ds.group_count();
  stats.counts.assign(group_count, 0);
  stats.mean_losses.assign(group_count, 0.0);
  for (std::size_t i = 0; i < sample_losses.size(); ++i) {
    const int z = ds.group_of(i);
    ++stats.counts[z];
    stats.mean_losses[z] += sample_losses[i];
  }
  for (int z = 0; z < group_count; ++z) {
    if (stats.counts[z] == 0) {
      throw ConfigError("evaluate: group " + std::to_string(z) +
                        " is empty in the test data");
    }
    stats.mean_losses[z] /= static_cast<double>(stats.counts[z]);
  }
  return stats;
}

inline double risk_spread(const GroupStats& stats) {
  const double n_total = static_cast<double>(stats.total());
  double grand = 0.0;
  for (std::size_t z = 0; z < stats.size(); ++z) {
    grand += static_cast<double>(stats.counts[z]) * stats.mean_losses[z];
  }
  grand /= n_total;
  double var = 0.0;
  for (std::size_t z = 0; z < stats.size(); ++z) {
    const double v = stats.mean_losses[z] - grand;
    var += static_cast<double>(stats.counts[z]) / n_total * v * v;
  }
  return std::sqrt(var);
}

}  // namespace detail

/// Evaluate a model on held-out data: 0-1 risk, the exact adversarial 0-1
/// risk via the two-point reduction, the structural adversarial risk over
/// the dataset's latent categories (0-1, plus the surrogate loss when one is
/// given), and the risk/sensitivity decomposition inputs.
inline RobustnessReport evaluate(const ModelParams& params, const Dataset& test,
                                 const FDivergenceSpec& spec,
                                 const LossSpec& surrogate = {Loss::ZeroOne}) {
  test.validate();

  std::vector<double> zero_one(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    zero_one[i] = zero_one_loss(params, test.row(i), test.labels[i]);
  }
  const GroupStats stats01 = detail::stats_from(zero_one, test);

  RobustnessReport report;
  report.group_counts = stats01.counts;
  report.per_group_risks = stats01.mean_losses;
  const double n_total = static_cast<double>(stats01.total());
  double grand = 0.0;
  for (std::size_t z = 0; z < stats01.size(); ++z) {
    grand += static_cast<double>(stats01.counts[z]) * stats01.mean_losses[z];
  }
  report.ordinary_risk = grand / n_total;
  report.sensitivity = detail::risk_spread(stats01);

  const GroupWeights solved = solve_weights(stats01, spec);
  report.structural_adv_risk_01 = solved.objective;
  report.weights_certificate = solved;
  report.adversarial_01_risk = adversarial01_risk(report.ordinary_risk, spec);

  if (surrogate.kind != Loss::ZeroOne) {
    std::vector<double> losses(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      losses[i] = sample_loss(params, test.row(i), test.labels[i], surrogate);
    }
    report.structural_adv_risk_surrogate =
        solve_weights(detail::stats_from(losses, test), spec).objective;
  }
  return report;
}

/// Check the Pearson decomposition
///   structural adversarial risk = R + sqrt(delta) * sensitivity,
/// which holds whenever the nonnegativity constraint stays inactive. Returns
/// (solver risk, decomposed risk); callers assert their agreement.
inline std::pair<double, double> decomposition_check(
    std::span<const double> per_group_risks,
    std::span<const std::int64_t> counts, double delta) {
  GroupStats stats;
  stats.counts.assign(counts.begin(), counts.end());
  stats.mean_losses.assign(per_group_risks.begin(), per_group_risks.end());

  const GroupWeights solved = solve_weights_pe(stats, delta);
  if (solved.path == SolvePath::ActiveSet) {
    throw RegimeError(
        "decomposition_check: weights were clamped; the identity only holds "
        "while w >= 0 is inactive (delta too large for this spread)");
  }

  const double n_total = static_cast<double>(stats.total());
  double grand = 0.0;
  for (std::size_t z = 0; z < stats.size(); ++z) {
    grand += static_cast<double>(stats.counts[z]) * stats.mean_losses[z];
  }
  grand /= n_total;
  const double rhs = grand + std::sqrt(delta) * detail::risk_spread(stats);
  return {solved.objective, rhs};
}

}  // namespace drobust
