#include <catch2/catch.hpp>

#include "drobust/divergences.hpp"
#include "drobust/rng.hpp"

using namespace drobust;

TEST_CASE("f values at the pinned points", "[divergences]") {
  CHECK(f_value(Divergence::KL, 1.0) == 0.0);
  CHECK(f_value(Divergence::Pearson, 1.0) == 0.0);
  CHECK(f_value(Divergence::Pearson, 3.0) == 4.0);
  CHECK(f_value(Divergence::KL, 0.0) == 0.0);  // limit of t ln t
  CHECK(f_value(Divergence::Pearson, 0.0) == 1.0);
}

TEST_CASE("f derivatives", "[divergences]") {
  CHECK(f_derivative(Divergence::KL, 1.0) == Approx(1.0));
  CHECK(f_derivative(Divergence::Pearson, 1.0) == 0.0);
  CHECK(f_derivative(Divergence::Pearson, 2.5) == Approx(3.0));
}

TEST_CASE("domain errors", "[divergences]") {
  CHECK_THROWS_AS(f_value(Divergence::KL, -0.5), DomainError);
  CHECK_THROWS_AS(f_value(Divergence::Pearson, -1e-9), DomainError);
  CHECK_THROWS_AS(f_derivative(Divergence::KL, 0.0), DomainError);
  CHECK_THROWS_AS(f_derivative(Divergence::KL, -1.0), DomainError);
}

TEST_CASE("convexity supporting line on a grid", "[divergences]") {
  // f(t) >= f(1) + f'(1) (t - 1) for convex f with f(1) = 0
  for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
    for (int i = 0; i <= 50; ++i) {
      const double t = 0.1 * i;
      const double support = f_derivative(kind, 1.0) * (t - 1.0);
      CHECK(f_value(kind, t) >= support - 1e-12);
    }
  }
}

TEST_CASE("midpoint convexity on random pairs", "[divergences]") {
  Rng rng(7);
  for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
    for (int rep = 0; rep < 200; ++rep) {
      const double a = 5.0 * rng.uniform();
      const double b = 5.0 * rng.uniform();
      const double mid = f_value(kind, 0.5 * (a + b));
      CHECK(mid <= 0.5 * (f_value(kind, a) + f_value(kind, b)) + 1e-12);
    }
  }
}

TEST_CASE("divergence config names", "[divergences]") {
  CHECK(parse_divergence("kl") == Divergence::KL);
  CHECK(parse_divergence("pearson") == Divergence::Pearson);
  CHECK_THROWS_AS(parse_divergence("chi2"), ConfigError);
}
