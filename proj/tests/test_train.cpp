#include <catch2/catch_amalgamated.hpp>

#include "tadkit/nn.hpp"
#include "tadkit/rng.hpp"
#include "tadkit/train.hpp"

using namespace tadkit;

namespace {

// y = sum of inputs, tiny dense net.
Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.inputs = Tensor({n, 4});
  ds.targets = Tensor({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double v = rng.uniform(-1, 1);
      ds.inputs.data[i * 4 + k] = v;
      sum += v;
    }
    ds.targets.data[i] = sum;
  }
  return ds;
}

ModelSpec toy_model() {
  ModelSpec spec;
  spec.input_shape = {4};
  spec.layers = {LayerSpec::dense_of(4, 8), LayerSpec::activation_of(ActivationFn::tanh),
                 LayerSpec::dense_of(8, 1)};
  spec.head = {HeadKind::regression, 1};
  return spec;
}

}  // namespace

TEST_CASE("trace has one entry per eval_every") {
  Model m = Model::build(toy_model(), 1);
  TrainConfig cfg;
  cfg.steps = 2048;
  cfg.eval_every = 256;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.01;
  cfg.seed = 7;
  const auto result = train(m, toy_dataset(64, 2), toy_dataset(32, 3), cfg);
  REQUIRE(result.trace.size() == 8);
  CHECK(result.trace.front().step == 256);
  CHECK(result.trace.back().step == 2048);
}

TEST_CASE("overfitting one small batch drives train loss near zero") {
  Model m = Model::build(toy_model(), 5);
  const auto data = toy_dataset(4, 9);
  TrainConfig cfg;
  cfg.steps = 2048;
  cfg.eval_every = 256;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.01;
  cfg.seed = 11;
  train(m, data, data, cfg);
  const double final_loss = evaluate_loss(m, data, LossKind::mse);
  CHECK(final_loss < 1e-2);
}

TEST_CASE("training is deterministic per seed") {
  TrainConfig cfg;
  cfg.steps = 512;
  cfg.eval_every = 128;
  cfg.batch_size = 8;
  cfg.seed = 21;

  Model a = Model::build(toy_model(), 13);
  const auto ra = train(a, toy_dataset(32, 4), toy_dataset(16, 5), cfg);
  Model b = Model::build(toy_model(), 13);
  const auto rb = train(b, toy_dataset(32, 4), toy_dataset(16, 5), cfg);

  REQUIRE(ra.trace.size() == rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    CHECK(ra.trace[i].step == rb.trace[i].step);
    CHECK(ra.trace[i].val_loss == rb.trace[i].val_loss);
  }
  auto pa = a.parameters();
  auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->data == pb[i]->data);
}

TEST_CASE("best-validation weights are retained") {
  Model m = Model::build(toy_model(), 17);
  const auto val = toy_dataset(16, 6);
  TrainConfig cfg;
  cfg.steps = 1024;
  cfg.eval_every = 128;
  cfg.batch_size = 8;
  cfg.seed = 23;
  const auto result = train(m, toy_dataset(32, 7), val, cfg);
  const double final_val = evaluate_loss(m, val, LossKind::mse);
  CHECK(final_val == Catch::Approx(result.best_val_loss).epsilon(1e-12));
  double min_trace = result.trace.front().val_loss;
  for (const auto& p : result.trace) min_trace = std::min(min_trace, p.val_loss);
  CHECK(result.best_val_loss == min_trace);
}

TEST_CASE("divergence reports the step index") {
  Model m = Model::build(toy_model(), 19);
  TrainConfig cfg;
  cfg.steps = 512;
  cfg.eval_every = 512;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e12;  // guaranteed blow-up
  cfg.optimizer = OptimizerKind::sgd_momentum;
  cfg.seed = 3;
  try {
    train(m, toy_dataset(8, 8), toy_dataset(8, 9), cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("eval_every must divide steps") {
  TrainConfig cfg;
  cfg.steps = 100;
  cfg.eval_every = 33;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("weighted bce loss clamps probabilities") {
  Tensor pred({2, 1});
  pred.data = {1e-9, 1.0 - 1e-12};  // beyond the clamp
  Tensor target({2, 1});
  target.data = {0.0, 1.0};
  const double loss = loss_and_grad(pred, target, {}, LossKind::weighted_bce);
  CHECK(std::isfinite(loss));
  CHECK(loss < 1e-5);
}

TEST_CASE("sgd with momentum also learns the toy task") {
  Model m = Model::build(toy_model(), 29);
  const auto data = toy_dataset(4, 10);
  TrainConfig cfg;
  cfg.steps = 2048;
  cfg.eval_every = 256;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.optimizer = OptimizerKind::sgd_momentum;
  cfg.seed = 31;
  train(m, data, data, cfg);
  CHECK(evaluate_loss(m, data, LossKind::mse) < 1e-2);
}
