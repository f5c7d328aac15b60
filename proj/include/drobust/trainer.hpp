#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
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

enum class Objective { ERM, AERM, StructuralAERM };

inline const char* objective_name(Objective obj) {
  switch (obj) {
    case Objective::ERM: return "erm";
    case Objective::AERM: return "aerm";
    case Objective::StructuralAERM: return "structural_aerm";
  }
  return "?";
}

inline Objective parse_objective(const std::string& name) {
  if (name == "erm") return Objective::ERM;
  if (name == "aerm") return Objective::AERM;
  if (name == "structural_aerm") return Objective::StructuralAERM;
  throw ConfigError("unknown objective \"" + name + "\"");
}

struct TrainConfig {
  Objective objective = Objective::ERM;
  FDivergenceSpec divergence;
  LossSpec loss;
  double lambda = 0.0;
  double learning_rate = 1.0;
  int max_epochs = 500;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
  double kl_tol = 1e-10;
  int kl_max_iters = 200;

  void validate() const {
    if (max_epochs < 1) throw DomainError("TrainConfig: max_epochs must be >= 1");
    if (!(learning_rate > 0.0)) {
      throw DomainError("TrainConfig: learning_rate must be > 0");
    }
    if (!(lambda >= 0.0)) throw DomainError("TrainConfig: lambda must be >= 0");
    if (!(grad_tol > 0.0)) throw DomainError("TrainConfig: grad_tol must be > 0");
  }
};

struct TrainReport {
  ModelParams params;
  std::vector<double> objective_trace;  // value at the start of each epoch,
                                        // plus the final value
  std::optional<GroupWeights> final_weights;  // absent for ERM
  bool converged = false;
  int epochs_run = 0;
  std::uint64_t seed = 0;  // full-batch GD ignores it; recorded for
                           // reproducibility of future extensions
};

namespace detail {

/// Effective latent categories for the inner maximization: AERM treats every
/// sample as its own group, structural AERM uses the dataset's groups.
inline std::pair<std::vector<int>, int> effective_groups(Objective objective,
                                                         const Dataset& ds) {
  std::vector<int> ids;
  int count = 1;
  if (objective == Objective::AERM) {
    ids.resize(ds.size());
    std::iota(ids.begin(), ids.end(), 0);
    count = static_cast<int>(ds.size());
  } else if (objective == Objective::StructuralAERM) {
    if (!ds.has_groups()) {
      throw ConfigError("structural_aerm needs group labels on the dataset");
    }
    ids = ds.groups;
    count = ds.num_groups;
  }
  return {std::move(ids), count};
}

inline GroupStats group_mean_losses(const Dataset& ds,
                                    std::span<const double> sample_losses,
                                    std::span<const int> group_ids,
                                    int group_count) {
  GroupStats stats;
  stats.counts.assign(group_count, 0);
  stats.mean_losses.assign(group_count, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int z = group_ids.empty() ? 0 : group_ids[i];
    ++stats.counts[z];
    stats.mean_losses[z] += sample_losses[i];
  }
  for (int z = 0; z < group_count; ++z) {
    if (stats.counts[z] == 0) {
      throw ConfigError("group " + std::to_string(z) +
                        " is empty in the training data");
    }
    stats.mean_losses[z] /= static_cast<double>(stats.counts[z]);
  }
  return stats;
}

inline double l2_penalty(const ModelParams& params, double lambda) {
  double acc = 0.0;
  for (double w : params.weights) acc += w * w;
  return 0.5 * lambda * acc;
}

inline double max_abs(const ModelParams& params) {
  double m = 0.0;
  for (double w : params.weights) m = std::max(m, std::abs(w));
  for (double b : params.biases) m = std::max(m, std::abs(b));
  return m;
}

inline double squared_norm(const ModelParams& params) {
  double acc = 0.0;
  for (double w : params.weights) acc += w * w;
  for (double b : params.biases) acc += b * b;
  return acc;
}

/// Per-sample losses without per-sample allocation.
inline void batch_losses(const ModelParams& params, const Dataset& ds,
                         const LossSpec& loss, std::vector<double>& out) {
  out.resize(ds.size());
  std::vector<double> score_buf(params.outputs);
  if (params.outputs == 1) {
    if (loss.kind == Loss::SoftmaxCrossEntropy) {
      throw ConfigError("softmax_ce needs a K-output head");
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      scores_into(params, ds.row(i), score_buf);
      out[i] = loss_value(loss, score_buf[0], margin_label(ds.labels[i]));
    }
    return;
  }
  if (is_margin_loss(loss.kind)) {
    throw ConfigError(std::string(loss_name(loss.kind)) +
                      " needs the 1-output binary head");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    scores_into(params, ds.row(i), score_buf);
    out[i] = loss_value(loss, score_buf, ds.labels[i]);
  }
}

/// Accumulate sum_i per_sample_scale[i] * grad l_i into `grad`.
inline void accumulate_gradient(const ModelParams& params, const Dataset& ds,
                                const LossSpec& loss,
                                std::span<const double> per_sample_scale,
                                ModelParams& grad) {
  std::vector<double> score_buf(params.outputs);
  const int dim = params.dim;
  if (params.outputs == 1) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::span<const double> x = ds.row(i);
      scores_into(params, x, score_buf);
      const double g = per_sample_scale[i] *
                       loss_score_gradient(loss, score_buf[0],
                                           margin_label(ds.labels[i]));
      for (int j = 0; j < dim; ++j) grad.weights[j] += g * x[j];
      grad.biases[0] += g;
    }
    return;
  }
  std::vector<double> grad_buf(params.outputs);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::span<const double> x = ds.row(i);
    scores_into(params, x, score_buf);
    const double shift =
        *std::max_element(score_buf.begin(), score_buf.end());
    double total = 0.0;
    for (int k = 0; k < params.outputs; ++k) {
      grad_buf[k] = std::exp(score_buf[k] - shift);
      total += grad_buf[k];
    }
    for (int k = 0; k < params.outputs; ++k) grad_buf[k] /= total;
    grad_buf[ds.labels[i]] -= 1.0;
    const double scale = per_sample_scale[i];
    for (int k = 0; k < params.outputs; ++k) {
      const double g = scale * grad_buf[k];
      double* row = grad.weights.data() + static_cast<std::size_t>(k) * dim;
      for (int j = 0; j < dim; ++j) row[j] += g * x[j];
      grad.biases[k] += g;
    }
  }
}

}  // namespace detail

/// Model shape implied by the dataset and the training loss: margin losses
/// use the 1-output binary head, everything else the K-output head.
inline ModelParams init_params(const Dataset& ds, const LossSpec& loss) {
  if (is_margin_loss(loss.kind)) {
    if (ds.num_classes != 2) {
      throw ConfigError(std::string(loss_name(loss.kind)) +
                        " needs a binary dataset (got K = " +
                        std::to_string(ds.num_classes) + ")");
    }
    return ModelParams::zeros(1, ds.dim);
  }
  if (ds.num_classes < 2) {
    throw ConfigError("need at least 2 classes");
  }
  return ModelParams::zeros(ds.num_classes, ds.dim);
}

struct ObjectiveValue {
  double value = 0.0;
  std::optional<GroupWeights> weights;
};

namespace detail {
inline bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}
}  // namespace detail

/// Regularized (adversarial) empirical risk at the given parameters, with the
/// inner maximization solved exactly. Non-finite sample losses (an overflowed
/// trial step) yield +inf so a line search can reject the step.
inline ObjectiveValue objective_value(const TrainConfig& config,
                                      const ModelParams& params,
                                      const Dataset& ds) {
  ds.validate();
  const auto [group_ids, group_count] =
      detail::effective_groups(config.objective, ds);

  std::vector<double> losses;
  detail::batch_losses(params, ds, config.loss, losses);
  if (!detail::all_finite(losses)) {
    ObjectiveValue out;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }

  ObjectiveValue out;
  if (config.objective == Objective::ERM) {
    out.value = std::accumulate(losses.begin(), losses.end(), 0.0) /
                static_cast<double>(ds.size());
  } else {
    const GroupStats stats =
        detail::group_mean_losses(ds, losses, group_ids, group_count);
    out.weights = solve_weights(stats, config.divergence, config.kl_tol,
                                config.kl_max_iters);
    out.value = out.weights->objective;
  }
  out.value += detail::l2_penalty(params, config.lambda);
  return out;
}

struct ObjectiveGradient {
  double value = 0.0;
  ModelParams grad;
  std::optional<GroupWeights> weights;
};

/// Value and Danskin gradient: solve the inner weights w*, then
/// grad = (1/N) sum_i w*_{z_i} grad l_i + lambda * W (biases unregularized).
/// At the rare parameters where the inner argmax is not unique, any
/// maximizer's gradient is a valid subgradient.
inline ObjectiveGradient objective_and_gradient(const TrainConfig& config,
                                                const ModelParams& params,
                                                const Dataset& ds) {
  ds.validate();
  const auto [group_ids, group_count] =
      detail::effective_groups(config.objective, ds);

  std::vector<double> losses;
  detail::batch_losses(params, ds, config.loss, losses);
  if (!detail::all_finite(losses)) {
    ObjectiveGradient out;
    out.value = std::numeric_limits<double>::infinity();
    out.grad = ModelParams::zeros(params.outputs, params.dim);
    return out;
  }

  ObjectiveGradient out;
  const double inv_n = 1.0 / static_cast<double>(ds.size());
  std::vector<double> sample_scale(ds.size(), inv_n);
  if (config.objective == Objective::ERM) {
    out.value = std::accumulate(losses.begin(), losses.end(), 0.0) * inv_n;
  } else {
    const GroupStats stats =
        detail::group_mean_losses(ds, losses, group_ids, group_count);
    out.weights = solve_weights(stats, config.divergence, config.kl_tol,
                                config.kl_max_iters);
    out.value = out.weights->objective;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      sample_scale[i] = out.weights->weights[group_ids[i]] * inv_n;
    }
  }

  out.grad = ModelParams::zeros(params.outputs, params.dim);
  detail::accumulate_gradient(params, ds, config.loss, sample_scale, out.grad);
  out.value += detail::l2_penalty(params, config.lambda);
  for (std::size_t t = 0; t < params.weights.size(); ++t) {
    out.grad.weights[t] += config.lambda * params.weights[t];
  }
  return out;
}

/// Full-batch gradient descent with backtracking line search (Armijo
/// constant 1e-4, at most 30 halvings) from theta = 0. Stops when the
/// gradient's max-norm falls below grad_tol or after max_epochs steps.
inline TrainReport train(const TrainConfig& config, const Dataset& ds) {
  config.validate();
  ds.validate();

  TrainReport report;
  report.seed = config.seed;
  report.params = init_params(ds, config.loss);

  // At theta = 0 every sample's loss is identical, so all group losses tie
  // exactly: a kink of the max-over-weights objective where the uniform
  // subgradient need not descend. One deterministic infinitesimal step along
  // the unweighted gradient lands on a generic, differentiable point. The
  // same step is applied for every objective, which keeps the delta = 0 and
  // S = 1 reductions exactly aligned with ERM.
  {
    TrainConfig plain = config;
    plain.objective = Objective::ERM;
    const ObjectiveGradient at_zero =
        objective_and_gradient(plain, report.params, ds);
    const double scale = detail::max_abs(at_zero.grad);
    if (scale > 0.0) {
      const double nudge = 1e-8 / scale;
      for (std::size_t t = 0; t < report.params.weights.size(); ++t) {
        report.params.weights[t] -= nudge * at_zero.grad.weights[t];
      }
      for (std::size_t t = 0; t < report.params.biases.size(); ++t) {
        report.params.biases[t] -= nudge * at_zero.grad.biases[t];
      }
    }
  }

  constexpr double armijo = 1e-4;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    ObjectiveGradient eval =
        objective_and_gradient(config, report.params, ds);
    if (!std::isfinite(eval.value)) {
      throw NumericError("train: objective is not finite at epoch " +
                         std::to_string(epoch));
    }
    report.objective_trace.push_back(eval.value);
    report.final_weights = eval.weights;
    if (detail::max_abs(eval.grad) <= config.grad_tol) {
      report.converged = true;
      return report;
    }

    const double grad_sq = detail::squared_norm(eval.grad);
    double step = config.learning_rate;
    bool accepted = false;
    ModelParams candidate = report.params;
    for (int halving = 0; halving <= 30; ++halving) {
      for (std::size_t t = 0; t < candidate.weights.size(); ++t) {
        candidate.weights[t] = report.params.weights[t] - step * eval.grad.weights[t];
      }
      for (std::size_t t = 0; t < candidate.biases.size(); ++t) {
        candidate.biases[t] = report.params.biases[t] - step * eval.grad.biases[t];
      }
      const double trial = objective_value(config, candidate, ds).value;
      if (std::isfinite(trial) && trial <= eval.value - armijo * step * grad_sq) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent step exists at double precision; keep the current iterate.
      return report;
    }
    report.params = candidate;
    report.epochs_run = epoch + 1;
  }

  const ObjectiveGradient final_eval =
      objective_and_gradient(config, report.params, ds);
  report.objective_trace.push_back(final_eval.value);
  report.final_weights = final_eval.weights;
  report.converged = detail::max_abs(final_eval.grad) <= config.grad_tol;
  return report;
}

/// Validation score matching the training objective: plain 0-1 risk for ERM,
/// the per-sample adversarial surrogate risk for AERM, and the structural
/// adversarial 0-1 risk for structural AERM.
inline double validation_score(const TrainConfig& config,
                               const ModelParams& params, const Dataset& valid) {
  switch (config.objective) {
    case Objective::ERM: {
      double risk = 0.0;
      for (std::size_t i = 0; i < valid.size(); ++i) {
        risk += zero_one_loss(params, valid.row(i), valid.labels[i]);
      }
      return risk / static_cast<double>(valid.size());
    }
    case Objective::AERM: {
      std::vector<double> losses(valid.size());
      for (std::size_t i = 0; i < valid.size(); ++i) {
        losses[i] = sample_loss(params, valid.row(i), valid.labels[i],
                                config.loss);
      }
      return per_sample_weights(losses, config.divergence, config.kl_tol,
                                config.kl_max_iters)
          .objective;
    }
    case Objective::StructuralAERM: {
      std::vector<double> zero_one(valid.size());
      for (std::size_t i = 0; i < valid.size(); ++i) {
        zero_one[i] = zero_one_loss(params, valid.row(i), valid.labels[i]);
      }
      const GroupStats stats = detail::group_mean_losses(
          valid, zero_one, valid.groups, valid.group_count());
      return solve_weights(stats, config.divergence, config.kl_tol,
                           config.kl_max_iters)
          .objective;
    }
  }
  throw ConfigError("validation_score: unreachable");
}

struct CrossValidationResult {
  double chosen_lambda = 0.0;
  std::vector<double> scores;  // mean validation score per grid entry
};

/// Group-stratified k-fold selection of lambda. Ties go to the larger
/// lambda.
inline CrossValidationResult cross_validate(const TrainConfig& base,
                                            const Dataset& ds,
                                            std::span<const double> lambda_grid,
                                            int folds) {
  if (lambda_grid.empty()) {
    throw DomainError("cross_validate: empty lambda grid");
  }
  if (folds < 2) throw DomainError("cross_validate: need folds >= 2");

  const auto splits = kfold_split(ds, folds, base.seed);

  // Materialize fold datasets once; every lambda reuses them.
  std::vector<std::pair<Dataset, Dataset>> fold_data;
  fold_data.reserve(splits.size());
  for (const auto& [train_idx, valid_idx] : splits) {
    Dataset fold_train = subset(ds, train_idx);
    if (fold_train.has_groups()) {
      std::vector<bool> seen(fold_train.num_groups, false);
      for (int z : fold_train.groups) seen[z] = true;
      for (int z = 0; z < fold_train.num_groups; ++z) {
        if (!seen[z]) {
          throw ConfigError("cross_validate: group " + std::to_string(z) +
                            " is missing from a training fold");
        }
      }
    }
    fold_data.emplace_back(std::move(fold_train), subset(ds, valid_idx));
  }

  CrossValidationResult result;
  result.scores.resize(lambda_grid.size());
  for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
    TrainConfig config = base;
    config.lambda = lambda_grid[li];
    double total = 0.0;
    for (const auto& [fold_train, fold_valid] : fold_data) {
      const TrainReport fit = train(config, fold_train);
      total += validation_score(config, fit.params, fold_valid);
    }
    result.scores[li] = total / static_cast<double>(fold_data.size());
  }

  std::size_t best = 0;
  for (std::size_t li = 1; li < lambda_grid.size(); ++li) {
    const bool better = result.scores[li] < result.scores[best];
    const bool tie_larger = result.scores[li] == result.scores[best] &&
                            lambda_grid[li] > lambda_grid[best];
    if (better || tie_larger) best = li;
  }
  result.chosen_lambda = lambda_grid[best];
  return result;
}

}  // namespace drobust
