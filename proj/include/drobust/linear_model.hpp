#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "drobust/errors.hpp"
#include "drobust/losses.hpp"

namespace drobust {

/// Parameters of a linear score model: K output rows over d features.
/// The softmax head uses K >= 2 rows; the binary margin head uses a single
/// row whose score feeds the margin losses with y in {+1, -1}.
struct ModelParams {
  int outputs = 0;  // K
  int dim = 0;      // d
  std::vector<double> weights;  // K*d, row-major
  std::vector<double> biases;   // K

  static ModelParams zeros(int outputs, int dim) {
    if (outputs < 1 || dim < 1) {
      throw DomainError("ModelParams: need outputs >= 1 and dim >= 1");
    }
    ModelParams p;
    p.outputs = outputs;
    p.dim = dim;
    p.weights.assign(static_cast<std::size_t>(outputs) * dim, 0.0);
    p.biases.assign(outputs, 0.0);
    return p;
  }

  double& weight(int k, int j) {
    return weights[static_cast<std::size_t>(k) * dim + j];
  }
  double weight(int k, int j) const {
    return weights[static_cast<std::size_t>(k) * dim + j];
  }

  bool same_shape(const ModelParams& other) const {
    return outputs == other.outputs && dim == other.dim;
  }

  bool all_finite() const {
    for (double w : weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : biases) {
      if (!std::isfinite(b)) return false;
    }
    return true;
  }
};

/// Map between class indices and margin labels for the binary head:
/// class 0 <-> +1, class 1 <-> -1.
inline int margin_label(int class_index) {
  if (class_index != 0 && class_index != 1) {
    throw DomainError("margin_label: binary class index must be 0 or 1");
  }
  return class_index == 0 ? 1 : -1;
}

inline int class_of_margin(int margin) {
  if (margin != 1 && margin != -1) {
    throw DomainError("class_of_margin: margin label must be +1 or -1");
  }
  return margin == 1 ? 0 : 1;
}

/// W*x + b into a caller-owned buffer of length K.
inline void scores_into(const ModelParams& params, std::span<const double> x,
                        std::span<double> out) {
  if (static_cast<int>(x.size()) != params.dim) {
    throw DomainError("scores: feature dimension " + std::to_string(x.size()) +
                      " does not match model dim " + std::to_string(params.dim));
  }
  for (int k = 0; k < params.outputs; ++k) {
    double acc = params.biases[k];
    const double* row = params.weights.data() +
                        static_cast<std::size_t>(k) * params.dim;
    for (int j = 0; j < params.dim; ++j) acc += row[j] * x[j];
    out[k] = acc;
  }
}

/// W*x + b.
inline std::vector<double> scores(const ModelParams& params,
                                  std::span<const double> x) {
  std::vector<double> out(params.outputs);
  scores_into(params, x, out);
  return out;
}

/// Predicted class index. The K-output head takes the argmax with ties
/// broken toward the smaller index; the 1-output head maps a nonnegative
/// score to class 0 (margin +1), matching the 2-class argmax encoding where
/// class 0 sits at index 0.
inline int predict(const ModelParams& params, std::span<const double> x) {
  const std::vector<double> s = scores(params, x);
  if (params.outputs == 1) return s[0] >= 0.0 ? 0 : 1;
  return argmax_index(s);
}

inline double zero_one_loss(const ModelParams& params,
                            std::span<const double> x, int y) {
  return predict(params, x) == y ? 0.0 : 1.0;
}

/// Per-sample surrogate loss. `y` is a class index for either head; the
/// margin head translates it to +1/-1 internally.
inline double sample_loss(const ModelParams& params, std::span<const double> x,
                          int y, const LossSpec& loss) {
  const std::vector<double> s = scores(params, x);
  if (params.outputs == 1) {
    if (loss.kind == Loss::SoftmaxCrossEntropy) {
      throw DomainError("sample_loss: softmax_ce needs a K-output head");
    }
    return loss_value(loss, s[0], margin_label(y));
  }
  if (is_margin_loss(loss.kind)) {
    throw DomainError(std::string("sample_loss: ") + loss_name(loss.kind) +
                      " needs the 1-output binary head");
  }
  return loss_value(loss, s, y);
}

struct SampleGrad {
  double loss = 0.0;
  ModelParams grad;
};

/// Loss and parameter gradient via the chain rule through the scores:
/// grad_W = outer(score_grad, x), grad_b = score_grad.
inline SampleGrad sample_loss_and_grad(const ModelParams& params,
                                       std::span<const double> x, int y,
                                       const LossSpec& loss) {
  if (!is_differentiable_loss(loss.kind)) {
    throw UnsupportedError("sample_loss_and_grad: the 0-1 loss has no gradient");
  }
  SampleGrad result;
  result.grad = ModelParams::zeros(params.outputs, params.dim);
  const std::vector<double> s = scores(params, x);
  if (params.outputs == 1) {
    if (loss.kind == Loss::SoftmaxCrossEntropy) {
      throw DomainError("sample_loss_and_grad: softmax_ce needs a K-output head");
    }
    const int ym = margin_label(y);
    result.loss = loss_value(loss, s[0], ym);
    const double g = loss_score_gradient(loss, s[0], ym);
    for (int j = 0; j < params.dim; ++j) result.grad.weights[j] = g * x[j];
    result.grad.biases[0] = g;
    return result;
  }
  if (is_margin_loss(loss.kind)) {
    throw DomainError(std::string("sample_loss_and_grad: ") +
                      loss_name(loss.kind) + " needs the 1-output binary head");
  }
  result.loss = loss_value(loss, s, y);
  const std::vector<double> g = loss_score_gradient(loss, s, y);
  for (int k = 0; k < params.outputs; ++k) {
    for (int j = 0; j < params.dim; ++j) {
      result.grad.weight(k, j) = g[k] * x[j];
    }
    result.grad.biases[k] = g[k];
  }
  return result;
}

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void save_model(const ModelParams& params, std::ostream& out) {
  out << "drobust-model v1 " << params.outputs << " " << params.dim << "\n";
  for (int k = 0; k < params.outputs; ++k) {
    for (int j = 0; j < params.dim; ++j) {
      out << (j ? " " : "") << format_double(params.weight(k, j));
    }
    out << "\n";
  }
  for (int k = 0; k < params.outputs; ++k) {
    out << (k ? " " : "") << format_double(params.biases[k]);
  }
  out << "\n";
}

inline void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open model file for writing: " + path);
  save_model(params, out);
}

inline ModelParams load_model(std::istream& in) {
  std::string magic, version;
  int outputs = 0, dim = 0;
  if (!(in >> magic >> version >> outputs >> dim) || magic != "drobust-model" ||
      version != "v1") {
    throw ParseError("model file: bad header (expected \"drobust-model v1 K d\")",
                     1);
  }
  if (outputs < 1 || dim < 1) {
    throw ParseError("model file: invalid shape", 1);
  }
  ModelParams params = ModelParams::zeros(outputs, dim);
  for (double& w : params.weights) {
    if (!(in >> w)) throw ParseError("model file: truncated weights");
  }
  for (double& b : params.biases) {
    if (!(in >> b)) throw ParseError("model file: truncated biases");
  }
  return params;
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace drobust
