#pragma once

#include <cmath>
#include <string>

#include "drobust/errors.hpp"

namespace drobust {

enum class Divergence { KL, Pearson };

/// Description of an f-divergence ball: which generator f, and the radius
/// delta of the uncertainty set { q : D_f[q||p] <= delta }.
struct FDivergenceSpec {
  Divergence kind = Divergence::KL;
  double delta = 0.5;
};

inline const char* divergence_name(Divergence kind) {
  return kind == Divergence::KL ? "kl" : "pearson";
}

inline Divergence parse_divergence(const std::string& name) {
  if (name == "kl") return Divergence::KL;
  if (name == "pearson") return Divergence::Pearson;
  throw ConfigError("unknown divergence \"" + name +
                    "\" (expected \"kl\" or \"pearson\")");
}

/// Generator value f(t) for t >= 0. KL uses t*ln(t) with f(0) = 0 taken as
/// the limit; Pearson uses (t-1)^2, so f(0) = 1.
inline double f_value(Divergence kind, double t) {
  if (!(t >= 0.0)) {
    throw DomainError("f_value: t must be nonnegative");
  }
  if (kind == Divergence::KL) {
    return t == 0.0 ? 0.0 : t * std::log(t);
  }
  const double u = t - 1.0;
  return u * u;
}

inline double f_value(const FDivergenceSpec& spec, double t) {
  return f_value(spec.kind, t);
}

/// Generator derivative f'(t). KL requires t > 0 (1 + ln t diverges at 0).
inline double f_derivative(Divergence kind, double t) {
  if (kind == Divergence::KL) {
    if (!(t > 0.0)) {
      throw DomainError("f_derivative: KL requires t > 0");
    }
    return 1.0 + std::log(t);
  }
  if (!(t >= 0.0)) {
    throw DomainError("f_derivative: t must be nonnegative");
  }
  return 2.0 * (t - 1.0);
}

inline double f_derivative(const FDivergenceSpec& spec, double t) {
  return f_derivative(spec.kind, t);
}

}  // namespace drobust
