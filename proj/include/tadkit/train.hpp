#pragma once

// Fixed-budget training loop. Batches are drawn with replacement from a
// seeded stream; the validation set is scored every eval_every steps and the
// best-scoring weights are restored at the end, so two runs with the same
// data, config and seeds are identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/nn.hpp"
#include "tadkit/rng.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

enum class LossKind { mse, weighted_bce };
enum class OptimizerKind { sgd_momentum, adam };

inline std::string to_string(LossKind k) { return k == LossKind::mse ? "mse" : "weighted_bce"; }
inline std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd_momentum";
}

inline LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "weighted_bce") return LossKind::weighted_bce;
  throw ConfigError("train.loss: unknown loss '" + s + "'");
}
inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd_momentum") return OptimizerKind::sgd_momentum;
  throw ConfigError("train.optimizer: unknown optimizer '" + s + "'");
}

struct TrainConfig {
  std::size_t steps = 2048;
  std::size_t eval_every = 256;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  LossKind loss = LossKind::mse;
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 1) throw ConfigError("train.steps: must be >= 1");
    if (eval_every < 1 || steps % eval_every != 0)
      throw ConfigError("train.eval_every: must divide steps");
    if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("train.learning_rate: must be positive");
  }
};

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"steps", c.steps},
           {"eval_every", c.eval_every},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"optimizer", to_string(c.optimizer)},
           {"loss", to_string(c.loss)},
           {"seed", c.seed}};
}
inline void from_json(const json& j, TrainConfig& c) {
  check_keys(j, "train", {},
             {"steps", "eval_every", "batch_size", "learning_rate", "optimizer", "loss", "seed"});
  c.steps = get_or<std::size_t>(j, "steps", 2048);
  c.eval_every = get_or<std::size_t>(j, "eval_every", 256);
  c.batch_size = get_or<std::size_t>(j, "batch_size", 32);
  c.learning_rate = get_or<double>(j, "learning_rate", 0.01);
  c.optimizer = optimizer_from_string(get_or<std::string>(j, "optimizer", "adam"));
  c.loss = loss_from_string(get_or<std::string>(j, "loss", "mse"));
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.validate();
}

// Supervised sample set. `weights` may be empty (uniform); otherwise one
// positive weight per sample, applied as a weighted mean in the loss.
struct Dataset {
  Tensor inputs;   // [N, ...sample shape]
  Tensor targets;  // [N, n_outputs]
  std::vector<double> weights;

  std::size_t size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
};

// Weighted mean loss over the batch; fills grad (dL/dprediction) if non-null.
inline double loss_and_grad(const Tensor& pred, const Tensor& target,
                            const std::vector<double>& weights, LossKind kind,
                            Tensor* grad = nullptr) {
  const std::size_t b = pred.shape.at(0);
  const std::size_t n_out = pred.numel() / b;
  if (target.numel() != pred.numel()) throw Error("loss: prediction/target size mismatch");
  if (!weights.empty() && weights.size() != b) throw Error("loss: one weight per sample required");

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) weight_sum += weights.empty() ? 1.0 : weights[i];

  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double gscale = w / weight_sum;
    for (std::size_t o = 0; o < n_out; ++o) {
      const std::size_t idx = i * n_out + o;
      if (kind == LossKind::mse) {
        const double d = pred.data[idx] - target.data[idx];
        total += w * d * d / static_cast<double>(n_out);
        if (grad) grad->data[idx] = gscale * 2.0 * d / static_cast<double>(n_out);
      } else {
        double p = pred.data[idx];
        p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
        const double t = target.data[idx];
        total += -w * (t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        if (grad) grad->data[idx] = gscale * (p - t) / (p * (1.0 - p));
      }
    }
  }
  return total / weight_sum;
}

namespace train_detail {

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, std::vector<Tensor*> params)
      : kind_(kind), lr_(lr), params_(std::move(params)) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->numel(), 0.0);
      v_[i].assign(params_[i]->numel(), 0.0);
    }
  }

  void step() {
    ++t_;
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, momentum = 0.9;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = *params_[i];
      if (kind_ == OptimizerKind::adam) {
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < p.numel(); ++k) {
          const double g = p.grad[k];
          m_[i][k] = beta1 * m_[i][k] + (1.0 - beta1) * g;
          v_[i][k] = beta2 * v_[i][k] + (1.0 - beta2) * g * g;
          p.data[k] -= lr_ * (m_[i][k] / c1) / (std::sqrt(v_[i][k] / c2) + eps);
        }
      } else {
        for (std::size_t k = 0; k < p.numel(); ++k) {
          m_[i][k] = momentum * m_[i][k] - lr_ * p.grad[k];
          p.data[k] += m_[i][k];
        }
      }
    }
  }

 private:
  OptimizerKind kind_;
  double lr_;
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

inline Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& rows) {
  const std::size_t sample = src.numel() / src.shape.at(0);
  std::vector<std::size_t> shape = src.shape;
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(src.data.begin() + rows[i] * sample, src.data.begin() + (rows[i] + 1) * sample,
              out.data.begin() + i * sample);
  }
  return out;
}

}  // namespace train_detail

struct TracePoint {
  std::size_t step = 0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<TracePoint> trace;  // one entry per eval_every steps
  double best_val_loss = 0.0;
  std::size_t best_step = 0;
};

// Unweighted mean loss over a full dataset, evaluated in fixed-size chunks.
inline double evaluate_loss(Model& model, const Dataset& data, LossKind kind) {
  const std::size_t n = data.size();
  if (n == 0) throw Error("evaluate_loss: empty dataset");
  const std::size_t chunk = 256;
  double total = 0.0;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    std::vector<std::size_t> rows(end - begin);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
    const Tensor x = train_detail::gather_rows(data.inputs, rows);
    const Tensor t = train_detail::gather_rows(data.targets, rows);
    const Tensor& p = model.forward(x);
    total += loss_and_grad(p, t, {}, kind) * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(n);
}

inline TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0)
    throw Error("train: empty train or validation set");

  Rng batch_rng(derive_seed(cfg.seed, "batches"));
  train_detail::Optimizer opt(cfg.optimizer, cfg.learning_rate, model.parameters());

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  const std::size_t n = train_set.size();
  std::vector<std::size_t> rows(cfg.batch_size);
  std::vector<double> batch_weights(cfg.batch_size);
  std::vector<std::vector<double>> best_snapshot = model.snapshot_params();

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      rows[i] = static_cast<std::size_t>(batch_rng.below(n));
      batch_weights[i] = train_set.weights.empty() ? 1.0 : train_set.weights[rows[i]];
    }
    const Tensor x = train_detail::gather_rows(train_set.inputs, rows);
    const Tensor t = train_detail::gather_rows(train_set.targets, rows);

    const Tensor& pred = model.forward(x);
    Tensor grad(pred.shape);
    const double loss = loss_and_grad(pred, t, batch_weights, cfg.loss, &grad);
    if (!std::isfinite(loss))
      throw Error("train: loss diverged at step " + std::to_string(step));

    model.zero_grad();
    model.backward(grad);
    opt.step();

    if (step % cfg.eval_every == 0) {
      const double val_loss = evaluate_loss(model, val_set, cfg.loss);
      if (!std::isfinite(val_loss))
        throw Error("train: validation loss diverged at step " + std::to_string(step));
      result.trace.push_back({step, val_loss});
      if (val_loss < result.best_val_loss) {
        result.best_val_loss = val_loss;
        result.best_step = step;
        best_snapshot = model.snapshot_params();
      }
    }
  }
  model.restore_params(best_snapshot);
  return result;
}

}  // namespace tadkit
