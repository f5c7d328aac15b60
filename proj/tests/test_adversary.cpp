#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "drobust/adversary.hpp"
#include "drobust/rng.hpp"
#include "test_oracles.hpp"

using namespace drobust;

namespace {

GroupStats make_stats(std::vector<std::int64_t> counts,
                      std::vector<double> losses) {
  GroupStats stats;
  stats.counts = std::move(counts);
  stats.mean_losses = std::move(losses);
  return stats;
}

void check_feasible(const GroupStats& stats, const GroupWeights& gw,
                    double delta, Divergence kind) {
  const double n_total = static_cast<double>(stats.total());
  double mass = 0.0;
  double divergence = 0.0;
  for (std::size_t s = 0; s < stats.size(); ++s) {
    CHECK(gw.weights[s] >= 0.0);
    mass += static_cast<double>(stats.counts[s]) * gw.weights[s];
    divergence += static_cast<double>(stats.counts[s]) *
                  f_value(kind, gw.weights[s]);
  }
  CHECK(mass / n_total == Approx(1.0).margin(1e-9));
  CHECK(divergence / n_total <= delta + 1e-9);
  CHECK(gw.achieved_divergence == Approx(divergence / n_total).margin(1e-9));
}

GroupStats random_stats(Rng& rng, int max_groups = 4) {
  const int s = 2 + static_cast<int>(rng.below(max_groups - 1));
  GroupStats stats;
  for (int i = 0; i < s; ++i) {
    stats.counts.push_back(1 + static_cast<std::int64_t>(rng.below(100)));
    stats.mean_losses.push_back(rng.uniform());
  }
  return stats;
}

}  // namespace

TEST_CASE("pearson: zero variance gives uniform weights", "[adversary]") {
  const GroupStats stats = make_stats({50, 50}, {0.3, 0.3});
  const GroupWeights gw = solve_weights_pe(stats, 0.5);
  CHECK(gw.weights[0] == 1.0);
  CHECK(gw.weights[1] == 1.0);
  CHECK(gw.objective == Approx(0.3));
  CHECK(gw.path == SolvePath::Uniform);
}

TEST_CASE("pearson: analytic fixture", "[adversary]") {
  const GroupStats stats = make_stats({50, 50}, {0.2, 0.4});
  const GroupWeights gw = solve_weights_pe(stats, 0.02);
  const double shift = 0.1 * std::sqrt(2.0);
  CHECK(gw.weights[0] == Approx(1.0 - shift).margin(1e-12));
  CHECK(gw.weights[1] == Approx(1.0 + shift).margin(1e-12));
  CHECK(gw.objective == Approx(0.3 + 0.1 * shift).margin(1e-12));
  CHECK(gw.path == SolvePath::Analytic);
  check_feasible(stats, gw, 0.02, Divergence::Pearson);

  // independent route: brute-force grid over the weight simplex
  const GroupWeights oracle =
      solve_weights_oracle(stats, {Divergence::Pearson, 0.02}, 1e-4);
  CHECK(gw.objective == Approx(oracle.objective).margin(1e-3));
}

TEST_CASE("pearson: delta 0 forces uniform", "[adversary]") {
  const GroupStats stats = make_stats({3, 7, 5}, {0.9, 0.1, 0.5});
  const GroupWeights gw = solve_weights_pe(stats, 0.0);
  for (double w : gw.weights) CHECK(w == Approx(1.0).margin(1e-12));
}

TEST_CASE("pearson: negative-component fallback clamps and stays feasible",
          "[adversary]") {
  // delta > p0/p1 pushes the low-loss group negative in the raw closed form
  const GroupStats stats = make_stats({50, 50}, {0.0, 1.0});
  const GroupWeights gw = solve_weights_pe(stats, 1.5);
  CHECK(gw.path == SolvePath::ActiveSet);
  CHECK(gw.weights[0] == 0.0);
  CHECK(gw.weights[1] == Approx(2.0).margin(1e-12));
  check_feasible(stats, gw, 1.5, Divergence::Pearson);

  const GroupWeights oracle =
      solve_weights_oracle(stats, {Divergence::Pearson, 1.5}, 1e-4);
  CHECK(gw.objective == Approx(oracle.objective).margin(1e-3));
}

TEST_CASE("pearson: errors", "[adversary]") {
  const GroupStats stats = make_stats({5, 5}, {0.1, 0.3});
  CHECK_THROWS_AS(solve_weights_pe(stats, -0.1), DomainError);
  CHECK_THROWS_AS(solve_weights_pe(make_stats({0, 5}, {0.1, 0.3}), 0.5),
                  DomainError);
}

TEST_CASE("kl: equal losses give uniform weights without gamma", "[adversary]") {
  const GroupStats stats = make_stats({10, 20, 30}, {0.4, 0.4, 0.4});
  const GroupWeights gw = solve_weights_kl(stats, 0.5);
  for (double w : gw.weights) CHECK(w == 1.0);
  CHECK(!gw.gamma.has_value());
  CHECK(gw.achieved_divergence == 0.0);
}

TEST_CASE("kl: dual bisection fixture", "[adversary]") {
  const GroupStats stats = make_stats({50, 50}, {0.0, 1.0});
  const GroupWeights gw = solve_weights_kl(stats, 0.5);
  REQUIRE(gw.path == SolvePath::DualBisection);
  REQUIRE(gw.gamma.has_value());

  // 1-D oracle: the top-group mass q solves q ln(2q) + (1-q) ln(2(1-q)) = 1/2
  const double q = oracles::kl_two_group_mass(0.5);
  CHECK(gw.objective == Approx(q).margin(1e-3));
  CHECK(gw.weights[0] == Approx(2.0 * (1.0 - q)).margin(1e-3));
  CHECK(gw.weights[1] == Approx(2.0 * q).margin(1e-3));
  CHECK(gw.achieved_divergence == Approx(0.5).margin(1e-10));
  check_feasible(stats, gw, 0.5, Divergence::KL);
}

TEST_CASE("kl: concentration when delta exceeds the attainable divergence",
          "[adversary]") {
  const GroupStats stats = make_stats({50, 50}, {0.0, 1.0});
  const GroupWeights gw = solve_weights_kl(stats, 1.0);  // ln 2 < 1
  CHECK(gw.path == SolvePath::Concentration);
  CHECK(gw.weights[0] == 0.0);
  CHECK(gw.weights[1] == 2.0);
  CHECK(gw.objective == Approx(1.0));
  CHECK(gw.achieved_divergence == Approx(std::log(2.0)));
  CHECK(!gw.gamma.has_value());
}

TEST_CASE("kl: tied argmax groups split the concentration weight equally",
          "[adversary]") {
  const GroupStats stats = make_stats({25, 25, 50}, {0.8, 0.8, 0.1});
  const GroupWeights gw = solve_weights_kl(stats, 5.0);
  CHECK(gw.weights[0] == Approx(2.0));
  CHECK(gw.weights[1] == Approx(2.0));
  CHECK(gw.weights[2] == 0.0);
}

TEST_CASE("kl: solver knob errors", "[adversary]") {
  const GroupStats stats = make_stats({5, 5}, {0.1, 0.3});
  CHECK_THROWS_AS(solve_weights_kl(stats, -0.5), DomainError);
  CHECK_THROWS_AS(solve_weights_kl(stats, 0.5, 0.0), DomainError);
  CHECK_THROWS_AS(solve_weights_kl(stats, 0.5, 1e-10, 0), DomainError);
}

TEST_CASE("kl: achieved divergence hits delta in the dual regime",
          "[adversary]") {
  Rng rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const GroupStats stats = random_stats(rng);
    const double delta = 0.02 + 0.3 * rng.uniform();
    const GroupWeights gw = solve_weights_kl(stats, delta);
    if (gw.path == SolvePath::DualBisection) {
      CHECK(gw.achieved_divergence == Approx(delta).margin(1e-8));
    }
    check_feasible(stats, gw, delta, Divergence::KL);
  }
}

TEST_CASE("oracle: degenerate shapes", "[adversary]") {
  const GroupStats single = make_stats({7}, {0.42});
  const GroupWeights gw =
      solve_weights_oracle(single, {Divergence::KL, 0.5}, 1e-3);
  CHECK(gw.weights[0] == 1.0);
  CHECK(gw.objective == Approx(0.42));

  const GroupStats stats = make_stats({50, 50}, {0.2, 0.4});
  const GroupWeights zero =
      solve_weights_oracle(stats, {Divergence::Pearson, 0.0}, 1e-3);
  CHECK(zero.weights[0] == Approx(1.0));
  CHECK(zero.weights[1] == Approx(1.0));

  GroupStats five;
  five.counts = {1, 1, 1, 1, 1};
  five.mean_losses = {0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK_THROWS_AS(solve_weights_oracle(five, {Divergence::KL, 0.5}, 1e-2),
                  UnsupportedError);
}

TEST_CASE("solvers track the oracle on random instances", "[adversary]") {
  Rng rng(43);
  for (int rep = 0; rep < 40; ++rep) {
    const GroupStats stats = random_stats(rng, 3);
    const double delta = rep % 2 == 0 ? 0.05 : 0.5;
    for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
      const FDivergenceSpec spec{kind, delta};
      const GroupWeights solved = solve_weights(stats, spec);
      const double step = stats.size() == 2 ? 1e-4 : 1e-3;
      const GroupWeights oracle = solve_weights_oracle(stats, spec, step);
      CHECK(solved.objective >= oracle.objective - 1e-9);
      CHECK(solved.objective <= oracle.objective + 1e-3);
      check_feasible(stats, solved, delta, kind);
    }
  }
}

TEST_CASE("per-sample weights: degenerate and fixture cases", "[adversary]") {
  const std::vector<double> equal{0.4, 0.4, 0.4};
  const GroupWeights uniform =
      per_sample_weights(equal, {Divergence::KL, 0.5});
  for (double w : uniform.weights) CHECK(w == 1.0);

  const std::vector<double> pair{0.0, 1.0};
  const GroupWeights fixture =
      per_sample_weights(pair, {Divergence::KL, 0.5});
  const double q = oracles::kl_two_group_mass(0.5);
  CHECK(fixture.weights[0] == Approx(2.0 * (1.0 - q)).margin(1e-3));
  CHECK(fixture.weights[1] == Approx(2.0 * q).margin(1e-3));

  const GroupWeights none =
      per_sample_weights(pair, {Divergence::Pearson, 0.0});
  CHECK(none.weights[0] == Approx(1.0).margin(1e-12));
  CHECK(none.weights[1] == Approx(1.0).margin(1e-12));
}

TEST_CASE("per-sample weights are monotone in the losses", "[adversary]") {
  Rng rng(47);
  for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
    for (int rep = 0; rep < 100; ++rep) {
      const int n = 2 + static_cast<int>(rng.below(49));
      std::vector<double> losses(n);
      // draw from a small discrete set so exact ties happen often
      for (double& l : losses) l = 0.25 * static_cast<double>(rng.below(5));
      const double delta = 0.05 + 0.9 * rng.uniform();
      const GroupWeights gw = per_sample_weights(losses, {kind, delta});
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (losses[i] < losses[j]) {
            CHECK(gw.weights[i] <= gw.weights[j] + 1e-12);
          } else if (losses[i] == losses[j]) {
            CHECK(gw.weights[i] == gw.weights[j]);
          }
        }
      }
    }
  }
}

TEST_CASE("adversarial 0-1 risk: edges and errors", "[adversary]") {
  for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
    const FDivergenceSpec spec{kind, 0.5};
    CHECK(adversarial01_risk(0.0, spec) == 0.0);
    CHECK(adversarial01_risk(1.0, spec) == 1.0);
    CHECK_THROWS_AS(adversarial01_risk(-0.1, spec), DomainError);
    CHECK_THROWS_AS(adversarial01_risk(1.1, spec), DomainError);
  }
  CHECK(adversarial01_risk(0.3, {Divergence::KL, 0.0}) == 0.3);
}

TEST_CASE("adversarial 0-1 risk: pinned values", "[adversary]") {
  // Pearson interior: closed form p1 + sqrt(delta p0 p1)
  CHECK(adversarial01_risk(0.2, {Divergence::Pearson, 0.5}) ==
        Approx(0.2 + std::sqrt(0.5 * 0.2 * 0.8)).margin(1e-9));

  // KL boundary case: ln(1/0.7) = 0.357 <= 0.5, so the risk saturates
  CHECK(adversarial01_risk(0.7, {Divergence::KL, 0.5}) == 1.0);

  // KL interior case, checked against a fresh bisection on the Case-1 root
  const double risk = adversarial01_risk(0.2, {Divergence::KL, 0.5});
  CHECK(risk == Approx(0.661).margin(1e-3));
  const auto kl_constraint = [](double r1) {
    const double r0 = (1.0 - 0.2 * r1) / 0.8;
    const double f0 = r0 == 0.0 ? 0.0 : r0 * std::log(r0);
    return 0.8 * f0 + 0.2 * r1 * std::log(r1) - 0.5;
  };
  double lo = 1.0, hi = 5.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (kl_constraint(mid) > 0.0 ? hi : lo) = mid;
  }
  CHECK(risk == Approx(0.2 * 0.5 * (lo + hi)).margin(1e-9));
}

TEST_CASE("adversarial 0-1 risk: two independent routes agree", "[adversary]") {
  // two-point reduction vs the singleton-group solver on a 0-1 vector
  Rng rng(53);
  for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
    for (int rep = 0; rep < 20; ++rep) {
      const int n = 10 + static_cast<int>(rng.below(40));
      std::vector<double> zero_one(n, 0.0);
      const int errors = 1 + static_cast<int>(rng.below(n - 1));
      for (int i = 0; i < errors; ++i) zero_one[i] = 1.0;
      const double p1 = static_cast<double>(errors) / n;
      const FDivergenceSpec spec{kind, 0.5};
      const double direct = per_sample_weights(zero_one, spec).objective;
      CHECK(adversarial01_risk(p1, spec) == Approx(direct).margin(1e-6));
    }
  }
}

TEST_CASE("adversarial 0-1 risk: monotone then saturated over p1",
          "[adversary]") {
  for (const Divergence kind : {Divergence::KL, Divergence::Pearson}) {
    const FDivergenceSpec spec{kind, 0.5};
    double previous = 0.0;
    bool saturated = false;
    for (int i = 1; i <= 99; ++i) {
      const double risk = adversarial01_risk(0.01 * i, spec);
      if (!saturated) {
        if (risk >= 1.0) {
          saturated = true;
        } else {
          CHECK(risk > previous);
        }
      } else {
        CHECK(risk == 1.0);
      }
      previous = risk;
    }
    CHECK(saturated);
  }
}

TEST_CASE("grid oracle cross-checks the exact 0-1 reduction", "[adversary]") {
  // Pearson, delta 0.5, p1 = 0.2 through the group solver with counts (80, 20)
  const GroupStats stats = make_stats({80, 20}, {0.0, 1.0});
  const FDivergenceSpec spec{Divergence::Pearson, 0.5};
  const GroupWeights oracle = solve_weights_oracle(stats, spec, 1e-5);
  CHECK(adversarial01_risk(0.2, spec) ==
        Approx(oracle.objective).margin(1e-4));
}
