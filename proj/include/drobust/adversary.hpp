#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drobust/divergences.hpp"
#include "drobust/errors.hpp"

namespace drobust {

/// Empirical per-group statistics: counts n_s and mean losses over S groups.
struct GroupStats {
  std::vector<std::int64_t> counts;
  std::vector<double> mean_losses;

  std::int64_t total() const {
    std::int64_t n = 0;
    for (std::int64_t c : counts) n += c;
    return n;
  }

  std::size_t size() const { return counts.size(); }

  void validate() const {
    if (counts.empty() || counts.size() != mean_losses.size()) {
      throw DomainError("GroupStats: need matching, nonempty counts and losses");
    }
    for (std::int64_t c : counts) {
      if (c < 1) throw DomainError("GroupStats: every group count must be >= 1");
    }
    for (double r : mean_losses) {
      if (!(r >= 0.0)) throw DomainError("GroupStats: mean losses must be >= 0");
    }
  }

  static GroupStats singletons(std::span<const double> losses) {
    GroupStats stats;
    stats.counts.assign(losses.size(), 1);
    stats.mean_losses.assign(losses.begin(), losses.end());
    return stats;
  }
};

/// Which branch produced a set of weights.
enum class SolvePath {
  Uniform,        // degenerate: all weights forced to 1
  Analytic,       // Pearson closed form, all components nonnegative
  ActiveSet,      // Pearson closed form after clamping negative components
  DualBisection,  // KL dual, gamma found by bisection
  Concentration,  // KL with delta >= max attainable divergence
  GridSearch,     // brute-force simplex oracle
};

inline const char* solve_path_name(SolvePath path) {
  switch (path) {
    case SolvePath::Uniform: return "uniform";
    case SolvePath::Analytic: return "analytic";
    case SolvePath::ActiveSet: return "active_set";
    case SolvePath::DualBisection: return "dual_bisection";
    case SolvePath::Concentration: return "concentration";
    case SolvePath::GridSearch: return "grid_search";
  }
  return "?";
}

/// Solution of the inner maximization sup_w (1/N) sum_s n_s w_s R_s over the
/// divergence ball, together with its certificate.
struct GroupWeights {
  std::vector<double> weights;
  std::optional<double> gamma;   // KL dual scalar, when the dual path ran
  double achieved_divergence = 0.0;
  double objective = 0.0;
  SolvePath path = SolvePath::Uniform;
};

namespace detail {

inline double weighted_objective(const GroupStats& stats,
                                 std::span<const double> w) {
  const double n_total = static_cast<double>(stats.total());
  double acc = 0.0;
  for (std::size_t s = 0; s < stats.size(); ++s) {
    acc += static_cast<double>(stats.counts[s]) * w[s] * stats.mean_losses[s];
  }
  return acc / n_total;
}

inline double weighted_divergence(const GroupStats& stats,
                                  std::span<const double> w, Divergence kind) {
  const double n_total = static_cast<double>(stats.total());
  double acc = 0.0;
  for (std::size_t s = 0; s < stats.size(); ++s) {
    acc += static_cast<double>(stats.counts[s]) * f_value(kind, w[s]);
  }
  return acc / n_total;
}

inline GroupWeights uniform_weights(const GroupStats& stats) {
  GroupWeights result;
  result.weights.assign(stats.size(), 1.0);
  result.achieved_divergence = 0.0;
  result.objective = weighted_objective(stats, result.weights);
  result.path = SolvePath::Uniform;
  return result;
}

}  // namespace detail

/// Pearson weights: w = sqrt(N*delta / sum_s n_s v_s^2) * v + 1 with
/// v_s = R_s - Rbar. If any component comes out negative, the most-negative
/// components are clamped to zero and the closed form is re-solved on the
/// remaining support until all free components are nonnegative; the
/// certificate's path records which branch ran.
///
/// Because the weights are an increasing affine map of the losses, the
/// clamped set is always a prefix of the loss-sorted order, so each
/// re-solve is O(1) after one sort and prefix-sum pass.
inline GroupWeights solve_weights_pe(const GroupStats& stats, double delta) {
  stats.validate();
  if (!(delta >= 0.0)) throw DomainError("solve_weights_pe: delta must be >= 0");

  const std::size_t n_groups = stats.size();
  const double n_total = static_cast<double>(stats.total());
  std::vector<double> fraction(n_groups);
  for (std::size_t s = 0; s < n_groups; ++s) {
    fraction[s] = static_cast<double>(stats.counts[s]) / n_total;
  }

  double grand_mean = 0.0;
  double loss_scale = 1.0;
  for (std::size_t s = 0; s < n_groups; ++s) {
    grand_mean += fraction[s] * stats.mean_losses[s];
    loss_scale = std::max(loss_scale, stats.mean_losses[s]);
  }
  // Rounding noise in the support variance is ~(1e-16 * loss_scale)^2; below
  // this floor the dispersal gain sqrt(delta * variance) is negligible and
  // the scale factor would only amplify noise.
  const double variance_floor = 1e-24 * loss_scale * loss_scale;

  GroupWeights result;

  // Interior fast path: the closed form on the full support, O(S) with no
  // sorting. Covers delta = 0 and the all-equal case exactly.
  {
    double variance = 0.0;
    for (std::size_t s = 0; s < n_groups; ++s) {
      const double v = stats.mean_losses[s] - grand_mean;
      variance += fraction[s] * v * v;
    }
    const double scale =
        variance <= variance_floor ? 0.0 : std::sqrt(delta / variance);
    double min_weight = std::numeric_limits<double>::infinity();
    result.weights.resize(n_groups);
    for (std::size_t s = 0; s < n_groups; ++s) {
      result.weights[s] =
          1.0 + scale * (stats.mean_losses[s] - grand_mean);
      min_weight = std::min(min_weight, result.weights[s]);
    }
    if (min_weight >= -1e-15) {
      bool uniform = true;
      for (double& w : result.weights) {
        w = std::max(w, 0.0);
        uniform = uniform && w == 1.0;
      }
      result.objective = detail::weighted_objective(stats, result.weights);
      result.achieved_divergence = detail::weighted_divergence(
          stats, result.weights, Divergence::Pearson);
      result.path = uniform ? SolvePath::Uniform : SolvePath::Analytic;
      return result;
    }
  }

  // Some component went negative: sort by loss and clamp from the bottom.
  std::vector<std::pair<double, std::uint32_t>> order(n_groups);
  for (std::size_t s = 0; s < n_groups; ++s) {
    order[s] = {stats.mean_losses[s], static_cast<std::uint32_t>(s)};
  }
  std::sort(order.begin(), order.end());

  // Prefix sums over the sorted order, centered at the grand mean so that
  // the full-support variance is exact.
  std::vector<double> pfx_mass(n_groups + 1, 0.0);
  std::vector<double> pfx_first(n_groups + 1, 0.0);
  std::vector<double> pfx_second(n_groups + 1, 0.0);
  for (std::size_t i = 0; i < n_groups; ++i) {
    const double mass = fraction[order[i].second];
    const double centered = order[i].first - grand_mean;
    pfx_mass[i + 1] = pfx_mass[i] + mass;
    pfx_first[i + 1] = pfx_first[i] + mass * centered;
    pfx_second[i + 1] = pfx_second[i] + mass * centered * centered;
  }

  std::size_t clamped = 0;
  double center = 1.0;
  double scale = 0.0;
  double support_mean = grand_mean;
  bool dispersed = false;
  for (;;) {
    const double mass = pfx_mass[n_groups] - pfx_mass[clamped];
    const double first = pfx_first[n_groups] - pfx_first[clamped];
    double variance =
        (pfx_second[n_groups] - pfx_second[clamped]) - first * first / mass;
    if (variance < 4.0 * variance_floor && clamped > 0) {
      // prefix-sum cancellation guard; the loop exits right after this
      variance = 0.0;
      const double mean = grand_mean + first / mass;
      for (std::size_t i = clamped; i < n_groups; ++i) {
        const double v = order[i].first - mean;
        variance += fraction[order[i].second] * v * v;
      }
    }
    support_mean = grand_mean + first / mass;

    // Divergence budget left for the free components: the clamped ones
    // contribute f(0) = 1 each, and centering the support at 1/mass costs
    // (1-P)^2/P.
    const double off_mass = 1.0 - mass;
    const double budget = delta - off_mass - off_mass * off_mass / mass;
    center = 1.0 / mass;

    if (variance <= variance_floor || budget <= 0.0) {
      if (budget < -1e-9) {
        throw NumericError("solve_weights_pe: active-set step left no budget");
      }
      dispersed = false;
      break;
    }

    scale = std::sqrt(budget / variance);
    const double lowest_loss = order[clamped].first;
    if (center + scale * (lowest_loss - support_mean) >= -1e-15) {
      dispersed = true;
      break;
    }
    // Clamp every group tied at the lowest loss; equal losses share a weight
    // and must be clamped together.
    while (clamped < n_groups && order[clamped].first == lowest_loss) {
      ++clamped;
    }
    if (clamped == n_groups) {
      throw NumericError("solve_weights_pe: clamped every group");
    }
  }

  result.weights.assign(n_groups, 0.0);
  for (std::size_t i = clamped; i < n_groups; ++i) {
    const std::uint32_t s = order[i].second;
    const double w =
        dispersed ? center + scale * (stats.mean_losses[s] - support_mean)
                  : center;
    result.weights[s] = std::max(w, 0.0);
  }

  result.objective = detail::weighted_objective(stats, result.weights);
  result.achieved_divergence =
      detail::weighted_divergence(stats, result.weights, Divergence::Pearson);
  result.path = SolvePath::ActiveSet;
  return result;
}

/// KL weights w_s = (N / Z(gamma)) * exp(R_s / gamma), where gamma > 0 is
/// found by bisection so that the achieved divergence equals delta. Two
/// degenerate regimes short-circuit the search: equal losses give uniform
/// weights, and delta at or above the largest attainable divergence gives
/// full concentration on the argmax-loss groups.
inline GroupWeights solve_weights_kl(const GroupStats& stats, double delta,
                                     double tol = 1e-10, int max_iters = 200) {
  stats.validate();
  if (!(delta >= 0.0)) throw DomainError("solve_weights_kl: delta must be >= 0");
  if (!(tol > 0.0)) throw DomainError("solve_weights_kl: tol must be > 0");
  if (max_iters < 1) throw DomainError("solve_weights_kl: max_iters must be >= 1");

  const std::size_t n_groups = stats.size();
  const double n_total = static_cast<double>(stats.total());
  const double top_loss =
      *std::max_element(stats.mean_losses.begin(), stats.mean_losses.end());
  const double low_loss =
      *std::min_element(stats.mean_losses.begin(), stats.mean_losses.end());

  if (top_loss == low_loss || delta == 0.0) {
    return detail::uniform_weights(stats);
  }

  std::int64_t top_count = 0;
  for (std::size_t s = 0; s < n_groups; ++s) {
    if (stats.mean_losses[s] == top_loss) top_count += stats.counts[s];
  }
  const double max_divergence = std::log(n_total / static_cast<double>(top_count));
  if (delta >= max_divergence) {
    GroupWeights result;
    result.weights.assign(n_groups, 0.0);
    for (std::size_t s = 0; s < n_groups; ++s) {
      if (stats.mean_losses[s] == top_loss) {
        result.weights[s] = n_total / static_cast<double>(top_count);
      }
    }
    result.objective = detail::weighted_objective(stats, result.weights);
    result.achieved_divergence = max_divergence;
    result.path = SolvePath::Concentration;
    return result;
  }

  // Weights and divergence at a given gamma, evaluated on spread-normalized
  // losses in shifted form. The dual is scale-covariant, so bisecting over
  // gamma / spread keeps the bracket meaningful even when the group losses
  // have nearly equalized (which robust training drives them to).
  const double spread = top_loss - low_loss;
  std::vector<double> weights(n_groups);
  const auto divergence_at = [&](double gamma_norm) {
    double z = 0.0;
    for (std::size_t s = 0; s < n_groups; ++s) {
      weights[s] =
          std::exp((stats.mean_losses[s] - top_loss) / (spread * gamma_norm));
      z += static_cast<double>(stats.counts[s]) * weights[s];
    }
    double kl = 0.0;
    for (std::size_t s = 0; s < n_groups; ++s) {
      weights[s] *= n_total / z;
      if (weights[s] > 0.0) {
        kl += static_cast<double>(stats.counts[s]) * weights[s] *
              std::log(weights[s]);
      }
    }
    return kl / n_total;
  };

  // Divergence decreases in gamma: bracket in log space, then bisect until
  // |KL - delta| <= tol.
  double log_lo = std::log(1e-8);
  double log_hi = std::log(1e8);
  double div_lo = divergence_at(std::exp(log_lo));
  double div_hi = divergence_at(std::exp(log_hi));
  if (div_lo < delta || div_hi > delta) {
    throw NumericError(
        "solve_weights_kl: gamma bracket does not straddle delta "
        "(KL at ends: " + std::to_string(div_lo) + ", " + std::to_string(div_hi) +
        ")");
  }

  double gamma_norm = std::exp(0.5 * (log_lo + log_hi));
  double achieved = divergence_at(gamma_norm);
  int iter = 0;
  while (std::abs(achieved - delta) > tol && iter < max_iters) {
    if (achieved > delta) log_lo = std::log(gamma_norm);
    else log_hi = std::log(gamma_norm);
    gamma_norm = std::exp(0.5 * (log_lo + log_hi));
    achieved = divergence_at(gamma_norm);
    ++iter;
  }
  if (std::abs(achieved - delta) > tol) {
    throw NumericError(
        "solve_weights_kl: bisection did not converge; last normalized "
        "bracket [" + std::to_string(std::exp(log_lo)) + ", " +
        std::to_string(std::exp(log_hi)) + "], |KL - delta| = " +
        std::to_string(std::abs(achieved - delta)));
  }

  GroupWeights result;
  result.weights = weights;
  result.gamma = gamma_norm * spread;
  result.achieved_divergence = achieved;
  result.objective = detail::weighted_objective(stats, result.weights);
  result.path = SolvePath::DualBisection;
  return result;
}

/// Dispatch on the divergence kind with the default solver knobs.
inline GroupWeights solve_weights(const GroupStats& stats,
                                  const FDivergenceSpec& spec,
                                  double kl_tol = 1e-10,
                                  int kl_max_iters = 200) {
  if (spec.kind == Divergence::Pearson) {
    return solve_weights_pe(stats, spec.delta);
  }
  return solve_weights_kl(stats, spec.delta, kl_tol, kl_max_iters);
}

/// Brute-force verifier: exhaustively search the probability simplex over
/// q_s = (n_s/N) w_s at the given resolution, keep points with divergence
/// <= delta, and return the best. The exact uniform point q = p is always
/// included as a candidate so that delta = 0 recovers w = 1 at any
/// resolution. Cost grows as grid^(S-1); S is capped at 4.
inline GroupWeights solve_weights_oracle(const GroupStats& stats,
                                         const FDivergenceSpec& spec,
                                         double grid_step) {
  stats.validate();
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw DomainError("solve_weights_oracle: grid_step must be in (0, 1]");
  }
  const std::size_t n_groups = stats.size();
  if (n_groups > 4) {
    throw UnsupportedError("solve_weights_oracle: supports at most 4 groups");
  }
  const double delta = spec.delta;
  if (!(delta >= 0.0)) throw DomainError("solve_weights_oracle: delta must be >= 0");

  const double n_total = static_cast<double>(stats.total());
  std::vector<double> fraction(n_groups);
  for (std::size_t s = 0; s < n_groups; ++s) {
    fraction[s] = static_cast<double>(stats.counts[s]) / n_total;
  }

  const auto finish = [&](const std::vector<double>& q) {
    GroupWeights result;
    result.weights.resize(n_groups);
    for (std::size_t s = 0; s < n_groups; ++s) {
      result.weights[s] = q[s] / fraction[s];
    }
    result.objective = detail::weighted_objective(stats, result.weights);
    result.achieved_divergence =
        detail::weighted_divergence(stats, result.weights, spec.kind);
    result.path = SolvePath::GridSearch;
    return result;
  };

  // Seed with the always-feasible uniform point.
  std::vector<double> best_q = fraction;
  double best_obj = 0.0;
  for (std::size_t s = 0; s < n_groups; ++s) {
    best_obj += fraction[s] * stats.mean_losses[s];
  }
  if (n_groups == 1) return finish(best_q);

  const long steps = std::max<long>(1, std::lround(1.0 / grid_step));
  const double feas_eps = 1e-12;

  // Per-coordinate tables over q = k/steps.
  std::vector<std::vector<double>> div_tab(n_groups), obj_tab(n_groups);
  for (std::size_t s = 0; s < n_groups; ++s) {
    div_tab[s].resize(steps + 1);
    obj_tab[s].resize(steps + 1);
    for (long k = 0; k <= steps; ++k) {
      const double q = static_cast<double>(k) / static_cast<double>(steps);
      div_tab[s][k] = fraction[s] * f_value(spec.kind, q / fraction[s]);
      obj_tab[s][k] = q * stats.mean_losses[s];
    }
  }

  const auto consider = [&](double divergence, double objective, long k0,
                            long k1, long k2, long k3) {
    if (divergence > delta + feas_eps || objective <= best_obj) return;
    best_obj = objective;
    const double inv = 1.0 / static_cast<double>(steps);
    best_q.assign(n_groups, 0.0);
    best_q[0] = static_cast<double>(k0) * inv;
    if (n_groups > 1) best_q[1] = static_cast<double>(k1) * inv;
    if (n_groups > 2) best_q[2] = static_cast<double>(k2) * inv;
    if (n_groups > 3) best_q[3] = static_cast<double>(k3) * inv;
  };

  if (n_groups == 2) {
    for (long k0 = 0; k0 <= steps; ++k0) {
      const long k1 = steps - k0;
      consider(div_tab[0][k0] + div_tab[1][k1],
               obj_tab[0][k0] + obj_tab[1][k1], k0, k1, 0, 0);
    }
  } else if (n_groups == 3) {
    for (long k0 = 0; k0 <= steps; ++k0) {
      for (long k1 = 0; k1 <= steps - k0; ++k1) {
        const long k2 = steps - k0 - k1;
        consider(div_tab[0][k0] + div_tab[1][k1] + div_tab[2][k2],
                 obj_tab[0][k0] + obj_tab[1][k1] + obj_tab[2][k2], k0, k1, k2,
                 0);
      }
    }
  } else {
    // Suffix tables over the last coordinate pair let the outer loops prune
    // whole slices on both feasibility and objective.
    std::vector<double> pair_min_div(steps + 1), pair_max_obj(steps + 1);
    for (long rem = 0; rem <= steps; ++rem) {
      double min_div = std::numeric_limits<double>::infinity();
      double max_obj = -std::numeric_limits<double>::infinity();
      for (long k2 = 0; k2 <= rem; ++k2) {
        min_div = std::min(min_div, div_tab[2][k2] + div_tab[3][rem - k2]);
        max_obj = std::max(max_obj, obj_tab[2][k2] + obj_tab[3][rem - k2]);
      }
      pair_min_div[rem] = min_div;
      pair_max_obj[rem] = max_obj;
    }
    for (long k0 = 0; k0 <= steps; ++k0) {
      for (long k1 = 0; k1 <= steps - k0; ++k1) {
        const long rem = steps - k0 - k1;
        const double head_div = div_tab[0][k0] + div_tab[1][k1];
        const double head_obj = obj_tab[0][k0] + obj_tab[1][k1];
        if (head_div + pair_min_div[rem] > delta + feas_eps) continue;
        if (head_obj + pair_max_obj[rem] <= best_obj) continue;
        const double* d2 = div_tab[2].data();
        const double* d3 = div_tab[3].data();
        const double* o2 = obj_tab[2].data();
        const double* o3 = obj_tab[3].data();
        for (long k2 = 0; k2 <= rem; ++k2) {
          consider(head_div + d2[k2] + d3[rem - k2],
                   head_obj + o2[k2] + o3[rem - k2], k0, k1, k2, rem - k2);
        }
      }
    }
  }
  return finish(best_q);
}

/// AERM's per-sample weight vector r: the group problem with N singleton
/// groups, delegated to the matching solver.
inline GroupWeights per_sample_weights(std::span<const double> losses,
                                       const FDivergenceSpec& spec,
                                       double kl_tol = 1e-10,
                                       int kl_max_iters = 200) {
  if (losses.empty()) {
    throw DomainError("per_sample_weights: need at least one loss");
  }
  return solve_weights(GroupStats::singletons(losses), spec, kl_tol,
                       kl_max_iters);
}

/// Exact worst-case reweighted 0-1 risk as a function of the plain 0-1 risk
/// p1. The optimization collapses to two weights (r0, r1) on the
/// correct/incorrect parts. If the boundary point r0 = 0 is feasible, i.e.
/// p0*f(0) + p1*f(1/p1) <= delta, the supremum is 1; otherwise the divergence
/// constraint is active and the unique root r1 in (1, 1/p1) of
/// p0*f((1 - p1*r1)/p0) + p1*f(r1) = delta gives the value p1*r1.
inline double adversarial01_risk(double p1, const FDivergenceSpec& spec) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) {
    throw DomainError("adversarial01_risk: p1 must lie in [0, 1]");
  }
  if (!(spec.delta >= 0.0)) {
    throw DomainError("adversarial01_risk: delta must be >= 0");
  }
  if (p1 == 0.0) return 0.0;
  if (p1 == 1.0) return 1.0;
  if (spec.delta == 0.0) return p1;

  const double p0 = 1.0 - p1;
  const double boundary_div =
      p0 * f_value(spec.kind, 0.0) + p1 * f_value(spec.kind, 1.0 / p1);
  if (boundary_div <= spec.delta) return 1.0;

  const auto excess = [&](double r1) {
    const double r0 = (1.0 - p1 * r1) / p0;
    return p0 * f_value(spec.kind, std::max(r0, 0.0)) +
           p1 * f_value(spec.kind, r1) - spec.delta;
  };

  // excess is increasing on (1, 1/p1), negative at 1, positive at 1/p1.
  double lo = 1.0;
  double hi = 1.0 / p1;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) hi = mid;
    else lo = mid;
  }
  return p1 * 0.5 * (lo + hi);
}

}  // namespace drobust
