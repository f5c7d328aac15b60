#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "drobust/errors.hpp"

namespace drobust {

/// Classification losses. SoftmaxCrossEntropy and ZeroOne act on a K-vector
/// of scores with a class index y in [0, K); Logistic, Hinge and Exponential
/// are margin losses acting on a scalar score with y in {+1, -1}.
enum class Loss { SoftmaxCrossEntropy, Logistic, Hinge, Exponential, ZeroOne };

struct LossSpec {
  Loss kind = Loss::SoftmaxCrossEntropy;
};

inline const char* loss_name(Loss kind) {
  switch (kind) {
    case Loss::SoftmaxCrossEntropy: return "softmax_ce";
    case Loss::Logistic: return "logistic";
    case Loss::Hinge: return "hinge";
    case Loss::Exponential: return "exponential";
    case Loss::ZeroOne: return "zero_one";
  }
  return "?";
}

inline Loss parse_loss(const std::string& name) {
  if (name == "softmax_ce") return Loss::SoftmaxCrossEntropy;
  if (name == "logistic") return Loss::Logistic;
  if (name == "hinge") return Loss::Hinge;
  if (name == "exponential") return Loss::Exponential;
  if (name == "zero_one") return Loss::ZeroOne;
  throw ConfigError("unknown loss \"" + name + "\"");
}

inline bool is_margin_loss(Loss kind) {
  return kind == Loss::Logistic || kind == Loss::Hinge ||
         kind == Loss::Exponential;
}

inline bool is_differentiable_loss(Loss kind) { return kind != Loss::ZeroOne; }

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// argmax with ties broken toward the smallest index.
inline int argmax_index(std::span<const double> values) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(values.size()); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

/// Softmax probabilities, computed with max subtraction so that any score
/// vector with finite entries yields finite probabilities.
inline std::vector<double> softmax(std::span<const double> scores) {
  const double shift = *std::max_element(scores.begin(), scores.end());
  std::vector<double> probs(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    probs[k] = std::exp(scores[k] - shift);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

namespace detail {
inline void check_multiclass_args(const LossSpec& spec,
                                  std::span<const double> scores, int y,
                                  const char* op) {
  if (is_margin_loss(spec.kind)) {
    throw UnsupportedError(std::string(op) + ": " + loss_name(spec.kind) +
                           " is a margin loss; use the scalar-score form");
  }
  if (scores.size() < 2) {
    throw DomainError(std::string(op) + ": need at least 2 classes");
  }
  if (y < 0 || y >= static_cast<int>(scores.size())) {
    throw DomainError(std::string(op) + ": class index " + std::to_string(y) +
                      " out of range [0, " + std::to_string(scores.size()) +
                      ")");
  }
}

inline void check_margin_args(const LossSpec& spec, int y, const char* op) {
  if (!is_margin_loss(spec.kind) && spec.kind != Loss::ZeroOne) {
    throw UnsupportedError(std::string(op) + ": " + loss_name(spec.kind) +
                           " needs a score vector, not a scalar");
  }
  if (y != 1 && y != -1) {
    throw DomainError(std::string(op) + ": margin label must be +1 or -1");
  }
}
}  // namespace detail

/// Multi-class loss on a score vector. SoftmaxCrossEntropy returns
/// -ln softmax(scores)[y]; ZeroOne applies the argmax rule.
inline double loss_value(const LossSpec& spec, std::span<const double> scores,
                         int y) {
  detail::check_multiclass_args(spec, scores, y, "loss_value");
  if (spec.kind == Loss::ZeroOne) {
    return argmax_index(scores) == y ? 0.0 : 1.0;
  }
  // log-sum-exp with max subtraction
  const double shift = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += std::exp(s - shift);
  return std::log(total) + shift - scores[y];
}

/// Margin loss on a scalar score with y in {+1, -1}.
inline double loss_value(const LossSpec& spec, double yhat, int y) {
  detail::check_margin_args(spec, y, "loss_value");
  const double margin = static_cast<double>(y) * yhat;
  switch (spec.kind) {
    case Loss::Logistic: return softplus(-margin);
    case Loss::Hinge: return std::max(0.0, 1.0 - margin);
    case Loss::Exponential: return std::exp(-margin);
    case Loss::ZeroOne: return (yhat >= 0.0 ? 1 : -1) == y ? 0.0 : 1.0;
    default: break;
  }
  throw UnsupportedError("loss_value: unreachable");
}

/// Gradient of the multi-class loss w.r.t. the scores. For softmax
/// cross-entropy this is softmax(scores) - onehot(y).
inline std::vector<double> loss_score_gradient(const LossSpec& spec,
                                               std::span<const double> scores,
                                               int y) {
  detail::check_multiclass_args(spec, scores, y, "loss_score_gradient");
  if (spec.kind == Loss::ZeroOne) {
    throw UnsupportedError("loss_score_gradient: the 0-1 loss has no gradient");
  }
  std::vector<double> grad = softmax(scores);
  grad[y] -= 1.0;
  return grad;
}

/// Derivative of the margin loss w.r.t. the scalar score. The hinge
/// subgradient at its kink is taken as 0.
inline double loss_score_gradient(const LossSpec& spec, double yhat, int y) {
  detail::check_margin_args(spec, y, "loss_score_gradient");
  const double yd = static_cast<double>(y);
  const double margin = yd * yhat;
  switch (spec.kind) {
    case Loss::Logistic: {
      // -y * sigmoid(-margin), overflow-safe in both directions
      if (margin > 0.0) {
        const double e = std::exp(-margin);
        return -yd * e / (1.0 + e);
      }
      return -yd / (1.0 + std::exp(margin));
    }
    case Loss::Hinge: return 1.0 - margin > 0.0 ? -yd : 0.0;
    case Loss::Exponential: return -yd * std::exp(-margin);
    case Loss::ZeroOne:
      throw UnsupportedError(
          "loss_score_gradient: the 0-1 loss has no gradient");
    default: break;
  }
  throw UnsupportedError("loss_score_gradient: unreachable");
}

}  // namespace drobust
