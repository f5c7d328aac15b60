#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "drobust/linear_model.hpp"
#include "drobust/rng.hpp"
#include "test_oracles.hpp"

using namespace drobust;

TEST_CASE("scores arithmetic", "[linear_model]") {
  ModelParams zero = ModelParams::zeros(3, 2);
  const std::vector<double> x{1.0, -2.0};
  for (double s : scores(zero, x)) CHECK(s == 0.0);

  ModelParams ident = ModelParams::zeros(2, 2);
  ident.weight(0, 0) = 1.0;
  ident.weight(1, 1) = 1.0;
  const std::vector<double> e1{1.0, 0.0};
  const auto s = scores(ident, e1);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 0.0);

  ModelParams row = ModelParams::zeros(1, 2);
  row.weight(0, 0) = 1.0;
  row.weight(0, 1) = 2.0;
  row.biases[0] = 0.5;
  const std::vector<double> ones{1.0, 1.0};
  CHECK(scores(row, ones)[0] == Approx(3.5));

  const std::vector<double> wrong{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(scores(row, wrong), DomainError);
}

TEST_CASE("predict tie-breaking", "[linear_model]") {
  ModelParams zero = ModelParams::zeros(3, 2);
  const std::vector<double> x{0.3, 0.7};
  CHECK(predict(zero, x) == 0);  // all-equal scores: smallest index

  ModelParams m = ModelParams::zeros(3, 1);
  m.biases = {0.1, 3.0, -1.0};
  const std::vector<double> x1{0.0};
  CHECK(predict(m, x1) == 1);
}

TEST_CASE("binary head sign rule matches the 2-class argmax encoding",
          "[linear_model]") {
  // one-row head with score s versus the 2-row head with scores (s, 0)
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const double w = 2.0 * rng.uniform() - 1.0;
    const double b = 2.0 * rng.uniform() - 1.0;
    ModelParams one = ModelParams::zeros(1, 1);
    one.weight(0, 0) = w;
    one.biases[0] = b;
    ModelParams two = ModelParams::zeros(2, 1);
    two.weight(0, 0) = w;
    two.biases[0] = b;
    const std::vector<double> x{4.0 * rng.uniform() - 2.0};
    CHECK(predict(one, x) == predict(two, x));
  }
}

TEST_CASE("zero params give ln K softmax loss", "[linear_model]") {
  ModelParams zero = ModelParams::zeros(2, 3);
  const std::vector<double> x{0.2, -0.4, 1.0};
  CHECK(sample_loss(zero, x, 1, {Loss::SoftmaxCrossEntropy}) ==
        Approx(std::log(2.0)));
}

TEST_CASE("parameter gradient matches finite differences", "[linear_model]") {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const int k = 2 + static_cast<int>(rng.below(2));
    const int d = 1 + static_cast<int>(rng.below(3));
    ModelParams params = ModelParams::zeros(k, d);
    for (double& w : params.weights) w = 2.0 * rng.uniform() - 1.0;
    for (double& b : params.biases) b = 2.0 * rng.uniform() - 1.0;
    std::vector<double> x(d);
    for (double& v : x) v = 2.0 * rng.uniform() - 1.0;
    const int y = static_cast<int>(rng.below(k));

    const SampleGrad sg =
        sample_loss_and_grad(params, x, y, {Loss::SoftmaxCrossEntropy});
    const ModelParams fd = oracles::finite_difference_model_gradient(
        [&](const ModelParams& p) {
          return sample_loss(p, x, y, {Loss::SoftmaxCrossEntropy});
        },
        params, 1e-6);
    for (std::size_t t = 0; t < sg.grad.weights.size(); ++t) {
      CHECK(sg.grad.weights[t] ==
            Approx(fd.weights[t]).epsilon(1e-5).margin(1e-9));
    }
    for (std::size_t t = 0; t < sg.grad.biases.size(); ++t) {
      CHECK(sg.grad.biases[t] ==
            Approx(fd.biases[t]).epsilon(1e-5).margin(1e-9));
    }
  }
}

TEST_CASE("zero input zeroes the weight gradient only", "[linear_model]") {
  ModelParams params = ModelParams::zeros(2, 2);
  params.biases = {0.3, -0.1};
  const std::vector<double> x{0.0, 0.0};
  const SampleGrad sg =
      sample_loss_and_grad(params, x, 1, {Loss::SoftmaxCrossEntropy});
  for (double w : sg.grad.weights) CHECK(w == 0.0);
  CHECK(sg.grad.biases[0] != 0.0);
}

TEST_CASE("0-1 training gradient is unsupported", "[linear_model]") {
  ModelParams params = ModelParams::zeros(2, 1);
  const std::vector<double> x{1.0};
  CHECK_THROWS_AS(sample_loss_and_grad(params, x, 0, {Loss::ZeroOne}),
                  UnsupportedError);
}

TEST_CASE("bias shift invariance of softmax", "[linear_model]") {
  Rng rng(23);
  ModelParams params = ModelParams::zeros(3, 2);
  for (double& w : params.weights) w = rng.uniform();
  for (double& b : params.biases) b = rng.uniform();
  ModelParams shifted = params;
  for (double& b : shifted.biases) b += 7.25;
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> x{rng.uniform(), rng.uniform()};
    CHECK(predict(params, x) == predict(shifted, x));
    const double a = sample_loss(params, x, 2, {Loss::SoftmaxCrossEntropy});
    const double b = sample_loss(shifted, x, 2, {Loss::SoftmaxCrossEntropy});
    CHECK(a == Approx(b).margin(1e-12));
  }
}

TEST_CASE("model file round-trip", "[linear_model]") {
  Rng rng(29);
  ModelParams params = ModelParams::zeros(3, 4);
  for (double& w : params.weights) w = 10.0 * rng.uniform() - 5.0;
  for (double& b : params.biases) b = rng.uniform();

  std::stringstream io;
  save_model(params, io);
  const std::string text = io.str();
  CHECK(text.rfind("drobust-model v1 3 4\n", 0) == 0);

  const ModelParams back = load_model(io);
  REQUIRE(back.outputs == 3);
  REQUIRE(back.dim == 4);
  for (std::size_t t = 0; t < params.weights.size(); ++t) {
    CHECK(back.weights[t] == params.weights[t]);
  }
  for (std::size_t t = 0; t < params.biases.size(); ++t) {
    CHECK(back.biases[t] == params.biases[t]);
  }
}

TEST_CASE("model file parse errors", "[linear_model]") {
  std::stringstream bad("wrong v1 2 2\n0 0\n0 0\n0 0\n");
  CHECK_THROWS_AS(load_model(bad), ParseError);
  std::stringstream truncated("drobust-model v1 2 2\n0 0\n");
  CHECK_THROWS_AS(load_model(truncated), ParseError);
}
