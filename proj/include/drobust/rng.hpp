#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "drobust/errors.hpp"

namespace drobust {

/// Deterministic random source. mt19937_64's output sequence is fixed by the
/// standard; the distributions here are hand-rolled so that samples are
/// identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return n == 0 ? 0 : eng_() % n;
  }

  /// Index sampled proportionally to the given nonnegative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw DomainError("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0) throw DomainError("categorical: weights sum to zero");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace drobust
