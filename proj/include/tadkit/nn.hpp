#pragma once

// Sequential model engine: the layer vocabulary shared by the forecasting,
// direct-classification and image-classification detectors, with exact
// reverse-mode gradients for every layer kind.
//
// Compute is 64-bit throughout; weights serialize as 32-bit floats (see
// model_io.hpp). All kernels are plain loops in fixed order, so results are
// deterministic for a given seed.
//
// Shape conventions (per sample, row-major):
//   dense                        [in]          -> [out]
//   conv1d                       [L, C_in]     -> [L_out, C_out]
//   depthwise_separable_conv1d   [L, C_in]     -> [L_out, C_out]
//   conv2d                       [C_in, H, W]  -> [C_out, H_out, W_out]
//   maxpool1d                    [L, C]        -> [L_out, C]
//   global_avg_pool              [L, C] / [C, H, W] -> [C]
//   activation / flatten         shape-preserving / [prod]
//
// A batch prepends one axis: [B, ...sample shape].

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/rng.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

enum class LayerKind {
  dense,
  conv1d,
  depthwise_separable_conv1d,
  conv2d,
  maxpool1d,
  global_avg_pool,
  activation,
  flatten,
};

enum class ActivationFn { relu, sigmoid, tanh };

inline std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::depthwise_separable_conv1d: return "depthwise_separable_conv1d";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::activation: return "activation";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

inline std::string to_string(ActivationFn f) {
  switch (f) {
    case ActivationFn::relu: return "relu";
    case ActivationFn::sigmoid: return "sigmoid";
    case ActivationFn::tanh: return "tanh";
  }
  return "?";
}

inline ActivationFn activation_from_string(const std::string& s) {
  if (s == "relu") return ActivationFn::relu;
  if (s == "sigmoid") return ActivationFn::sigmoid;
  if (s == "tanh") return ActivationFn::tanh;
  throw ConfigError("activation.fn: unknown function '" + s + "'");
}

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t in = 0, out = 0;                    // dense
  std::size_t in_channels = 0, out_channels = 0;  // conv layers
  std::size_t kernel = 0;                         // conv1d/dwsep/maxpool
  std::size_t kernel_h = 0, kernel_w = 0;         // conv2d
  std::size_t stride = 1;
  std::size_t padding = 0;
  ActivationFn fn = ActivationFn::relu;           // activation

  static LayerSpec dense_of(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in = in;
    s.out = out;
    return s;
  }
  static LayerSpec conv1d_of(std::size_t cin, std::size_t cout, std::size_t k,
                             std::size_t stride = 1, std::size_t pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::conv1d;
    s.in_channels = cin;
    s.out_channels = cout;
    s.kernel = k;
    s.stride = stride;
    s.padding = pad;
    return s;
  }
  static LayerSpec dwsep_conv1d_of(std::size_t cin, std::size_t cout, std::size_t k,
                                   std::size_t stride = 1, std::size_t pad = 0) {
    LayerSpec s = conv1d_of(cin, cout, k, stride, pad);
    s.kind = LayerKind::depthwise_separable_conv1d;
    return s;
  }
  static LayerSpec conv2d_of(std::size_t cin, std::size_t cout, std::size_t kh, std::size_t kw,
                             std::size_t stride = 1, std::size_t pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.in_channels = cin;
    s.out_channels = cout;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.stride = stride;
    s.padding = pad;
    return s;
  }
  static LayerSpec maxpool1d_of(std::size_t k, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::maxpool1d;
    s.kernel = k;
    s.stride = stride;
    return s;
  }
  static LayerSpec global_avg_pool_of() {
    LayerSpec s;
    s.kind = LayerKind::global_avg_pool;
    return s;
  }
  static LayerSpec activation_of(ActivationFn fn) {
    LayerSpec s;
    s.kind = LayerKind::activation;
    s.fn = fn;
    return s;
  }
  static LayerSpec flatten_of() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }

  void validate(const std::string& ctx) const {
    auto positive = [&](std::size_t v, const char* what) {
      if (v < 1) throw ConfigError(ctx + ": " + what + " must be >= 1");
    };
    switch (kind) {
      case LayerKind::dense:
        positive(in, "in");
        positive(out, "out");
        break;
      case LayerKind::conv1d:
      case LayerKind::depthwise_separable_conv1d:
        positive(in_channels, "in_channels");
        positive(out_channels, "out_channels");
        positive(kernel, "kernel");
        positive(stride, "stride");
        if (padding >= kernel) throw ConfigError(ctx + ": padding must be < kernel");
        break;
      case LayerKind::conv2d:
        positive(in_channels, "in_channels");
        positive(out_channels, "out_channels");
        positive(kernel_h, "kernel_h");
        positive(kernel_w, "kernel_w");
        positive(stride, "stride");
        if (padding >= kernel_h || padding >= kernel_w)
          throw ConfigError(ctx + ": padding must be < kernel");
        break;
      case LayerKind::maxpool1d:
        positive(kernel, "kernel");
        positive(stride, "stride");
        break;
      case LayerKind::global_avg_pool:
      case LayerKind::activation:
      case LayerKind::flatten:
        break;
    }
  }
};

enum class HeadKind { regression, binary_classifier };

struct HeadSpec {
  HeadKind kind = HeadKind::regression;
  std::size_t outputs = 1;  // regression only
};

struct ModelSpec {
  std::vector<std::size_t> input_shape;
  std::vector<LayerSpec> layers;
  HeadSpec head;
};

// ---------------------------------------------------------------------------
// Shape inference

inline std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                   std::size_t padding, const std::string& ctx) {
  if (in + 2 * padding < kernel)
    throw ConfigError(ctx + ": input extent " + std::to_string(in) + " shorter than kernel");
  return (in + 2 * padding - kernel) / stride + 1;
}

inline std::vector<std::size_t> layer_output_shape(const LayerSpec& layer,
                                                   const std::vector<std::size_t>& in_shape,
                                                   const std::string& ctx) {
  layer.validate(ctx);
  auto expect_rank = [&](std::size_t rank) {
    if (in_shape.size() != rank)
      throw ConfigError(ctx + ": expected rank-" + std::to_string(rank) + " input, got " +
                        shape_string(in_shape));
  };
  switch (layer.kind) {
    case LayerKind::dense:
      expect_rank(1);
      if (in_shape[0] != layer.in)
        throw ConfigError(ctx + ": dense expects " + std::to_string(layer.in) + " inputs, got " +
                          shape_string(in_shape));
      return {layer.out};
    case LayerKind::conv1d:
    case LayerKind::depthwise_separable_conv1d: {
      expect_rank(2);
      if (in_shape[1] != layer.in_channels)
        throw ConfigError(ctx + ": expects " + std::to_string(layer.in_channels) +
                          " channels, got " + shape_string(in_shape));
      const std::size_t lout =
          conv_out_extent(in_shape[0], layer.kernel, layer.stride, layer.padding, ctx);
      return {lout, layer.out_channels};
    }
    case LayerKind::conv2d: {
      expect_rank(3);
      if (in_shape[0] != layer.in_channels)
        throw ConfigError(ctx + ": expects " + std::to_string(layer.in_channels) +
                          " channels, got " + shape_string(in_shape));
      const std::size_t h =
          conv_out_extent(in_shape[1], layer.kernel_h, layer.stride, layer.padding, ctx);
      const std::size_t w =
          conv_out_extent(in_shape[2], layer.kernel_w, layer.stride, layer.padding, ctx);
      return {layer.out_channels, h, w};
    }
    case LayerKind::maxpool1d: {
      expect_rank(2);
      if (in_shape[0] < layer.kernel)
        throw ConfigError(ctx + ": input shorter than pooling kernel");
      return {(in_shape[0] - layer.kernel) / layer.stride + 1, in_shape[1]};
    }
    case LayerKind::global_avg_pool:
      if (in_shape.size() == 2) return {in_shape[1]};
      if (in_shape.size() == 3) return {in_shape[0]};
      throw ConfigError(ctx + ": global_avg_pool expects rank-2 or rank-3 input");
    case LayerKind::activation:
      return in_shape;
    case LayerKind::flatten:
      return {Tensor::numel_of(in_shape)};
  }
  throw ConfigError(ctx + ": unknown layer kind");
}

// One entry per executed stage. A binary_classifier head appends a sigmoid
// stage; a regression head is the identity and adds nothing.
struct ShapedLayer {
  LayerSpec spec;
  std::vector<std::size_t> in_shape;
  std::vector<std::size_t> out_shape;
  bool is_head = false;
};

inline std::vector<ShapedLayer> plan_stages(const ModelSpec& model) {
  if (model.input_shape.empty()) throw ConfigError("model.input_shape: must be non-empty");
  for (auto e : model.input_shape) {
    if (e < 1) throw ConfigError("model.input_shape: extents must be >= 1");
  }
  std::vector<ShapedLayer> plan;
  std::vector<std::size_t> shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    const std::string ctx = "layer " + std::to_string(i) + " (" + to_string(layer.kind) + ")";
    auto out = layer_output_shape(layer, shape, ctx);
    plan.push_back({layer, shape, out, false});
    shape = std::move(out);
  }
  if (model.head.kind == HeadKind::regression) {
    if (model.head.outputs < 1) throw ConfigError("model.head.outputs: must be >= 1");
    if (shape.size() != 1 || shape[0] != model.head.outputs)
      throw ConfigError("model.head: regression expects final shape [" +
                        std::to_string(model.head.outputs) + "], got " + shape_string(shape));
  } else {
    if (shape.size() != 1 || shape[0] != 1)
      throw ConfigError("model.head: binary_classifier expects final shape [1], got " +
                        shape_string(shape));
    plan.push_back({LayerSpec::activation_of(ActivationFn::sigmoid), shape, shape, true});
  }
  return plan;
}

inline std::vector<std::size_t> model_output_shape(const ModelSpec& model) {
  auto plan = plan_stages(model);
  if (plan.empty()) return model.input_shape;
  return plan.back().out_shape;
}

// ---------------------------------------------------------------------------
// JSON schema

inline void to_json(json& j, const LayerSpec& l) {
  j = json{{"kind", to_string(l.kind)}};
  switch (l.kind) {
    case LayerKind::dense:
      j["in"] = l.in;
      j["out"] = l.out;
      break;
    case LayerKind::conv1d:
    case LayerKind::depthwise_separable_conv1d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      break;
    case LayerKind::conv2d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel_h"] = l.kernel_h;
      j["kernel_w"] = l.kernel_w;
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      break;
    case LayerKind::maxpool1d:
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      break;
    case LayerKind::activation:
      j["fn"] = to_string(l.fn);
      break;
    case LayerKind::global_avg_pool:
    case LayerKind::flatten:
      break;
  }
}

inline void from_json(const json& j, LayerSpec& l) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("layer: missing 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "dense") {
    check_keys(j, "layer dense", {"kind", "in", "out"});
    l = LayerSpec::dense_of(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>());
  } else if (kind == "conv1d" || kind == "depthwise_separable_conv1d") {
    check_keys(j, "layer " + kind, {"kind", "in_channels", "out_channels", "kernel"},
               {"stride", "padding"});
    l = LayerSpec::conv1d_of(j.at("in_channels").get<std::size_t>(),
                             j.at("out_channels").get<std::size_t>(),
                             j.at("kernel").get<std::size_t>(), get_or<std::size_t>(j, "stride", 1),
                             get_or<std::size_t>(j, "padding", 0));
    if (kind == "depthwise_separable_conv1d") l.kind = LayerKind::depthwise_separable_conv1d;
  } else if (kind == "conv2d") {
    check_keys(j, "layer conv2d", {"kind", "in_channels", "out_channels", "kernel_h", "kernel_w"},
               {"stride", "padding"});
    l = LayerSpec::conv2d_of(j.at("in_channels").get<std::size_t>(),
                             j.at("out_channels").get<std::size_t>(),
                             j.at("kernel_h").get<std::size_t>(),
                             j.at("kernel_w").get<std::size_t>(),
                             get_or<std::size_t>(j, "stride", 1),
                             get_or<std::size_t>(j, "padding", 0));
  } else if (kind == "maxpool1d") {
    check_keys(j, "layer maxpool1d", {"kind", "kernel"}, {"stride"});
    const auto k = j.at("kernel").get<std::size_t>();
    l = LayerSpec::maxpool1d_of(k, get_or<std::size_t>(j, "stride", k));
  } else if (kind == "global_avg_pool") {
    check_keys(j, "layer global_avg_pool", {"kind"});
    l = LayerSpec::global_avg_pool_of();
  } else if (kind == "activation") {
    check_keys(j, "layer activation", {"kind", "fn"});
    l = LayerSpec::activation_of(activation_from_string(j.at("fn").get<std::string>()));
  } else if (kind == "flatten") {
    check_keys(j, "layer flatten", {"kind"});
    l = LayerSpec::flatten_of();
  } else {
    throw ConfigError("layer.kind: unknown kind '" + kind + "'");
  }
  l.validate("layer " + kind);
}

inline void to_json(json& j, const HeadSpec& h) {
  if (h.kind == HeadKind::regression) {
    j = json{{"kind", "regression"}, {"outputs", h.outputs}};
  } else {
    j = json{{"kind", "binary_classifier"}};
  }
}

inline void from_json(const json& j, HeadSpec& h) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("head: missing 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "regression") {
    check_keys(j, "head regression", {"kind", "outputs"});
    h.kind = HeadKind::regression;
    h.outputs = j.at("outputs").get<std::size_t>();
  } else if (kind == "binary_classifier") {
    check_keys(j, "head binary_classifier", {"kind"});
    h.kind = HeadKind::binary_classifier;
    h.outputs = 1;
  } else {
    throw ConfigError("head.kind: unknown kind '" + kind + "'");
  }
}

inline void to_json(json& j, const ModelSpec& m) {
  j = json{{"input_shape", m.input_shape}, {"layers", m.layers}, {"head", m.head}};
}

inline void from_json(const json& j, ModelSpec& m) {
  check_keys(j, "model", {"input_shape", "layers", "head"});
  j.at("input_shape").get_to(m.input_shape);
  j.at("layers").get_to(m.layers);
  j.at("head").get_to(m.head);
  plan_stages(m);  // shape-check eagerly
}

// ---------------------------------------------------------------------------
// Stages

namespace nn_detail {

inline double stable_sigmoid(double x) {
  double p;
  if (x >= 0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  // Keep strictly inside (0, 1) even for saturating inputs.
  if (p < 1e-15) p = 1e-15;
  if (p > 1.0 - 1e-15) p = 1.0 - 1e-15;
  return p;
}

class Stage {
 public:
  Stage(ShapedLayer plan) : plan_(std::move(plan)) {
    in_elems_ = Tensor::numel_of(plan_.in_shape);
    out_elems_ = Tensor::numel_of(plan_.out_shape);
  }
  virtual ~Stage() = default;

  const ShapedLayer& plan() const { return plan_; }
  std::size_t in_elems() const { return in_elems_; }
  std::size_t out_elems() const { return out_elems_; }

  Tensor make_output(std::size_t batch) const {
    std::vector<std::size_t> shape;
    shape.push_back(batch);
    shape.insert(shape.end(), plan_.out_shape.begin(), plan_.out_shape.end());
    return Tensor(std::move(shape));
  }

  virtual void forward(const Tensor& x, Tensor& y, std::size_t batch) const = 0;
  // Accumulates parameter gradients; writes input gradient into gx (same
  // shape as x, preallocated to zeros).
  virtual void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) = 0;

  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<std::string> param_names() const { return {}; }
  virtual void init_params(Rng&) {}

 protected:
  ShapedLayer plan_;
  std::size_t in_elems_ = 0;
  std::size_t out_elems_ = 0;
};

inline void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = rng.uniform(-a, a);
}

class DenseStage final : public Stage {
 public:
  explicit DenseStage(ShapedLayer plan)
      : Stage(std::move(plan)),
        w_({plan_.spec.in, plan_.spec.out}),
        b_({plan_.spec.out}) {}

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const std::size_t in = plan_.spec.in, out = plan_.spec.out;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xr = x.data.data() + bi * in;
      double* yr = y.data.data() + bi * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = b_[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double xv = xr[i];
        const double* wr = w_.data.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += xv * wr[o];
      }
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    const std::size_t in = plan_.spec.in, out = plan_.spec.out;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xr = x.data.data() + bi * in;
      const double* gyr = gy.data.data() + bi * out;
      double* gxr = gx.data.data() + bi * in;
      for (std::size_t o = 0; o < out; ++o) b_.grad[o] += gyr[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double* wr = w_.data.data() + i * out;
        double* gwr = w_.grad.data() + i * out;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) {
          acc += gyr[o] * wr[o];
          gwr[o] += xr[i] * gyr[o];
        }
        gxr[i] += acc;
      }
    }
  }

  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::vector<std::string> param_names() const override { return {"w", "b"}; }
  void init_params(Rng& rng) override { glorot_fill(w_, plan_.spec.in, plan_.spec.out, rng); }

 private:
  Tensor w_, b_;
};

class Conv1dStage final : public Stage {
 public:
  explicit Conv1dStage(ShapedLayer plan)
      : Stage(std::move(plan)),
        w_({plan_.spec.out_channels, plan_.spec.in_channels, plan_.spec.kernel}),
        b_({plan_.spec.out_channels}) {}

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const auto& s = plan_.spec;
    const std::size_t L = plan_.in_shape[0], C = s.in_channels;
    const std::size_t Lo = plan_.out_shape[0], F = s.out_channels;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      double* yout = y.data.data() + bi * out_elems_;
      for (std::size_t o = 0; o < Lo; ++o) {
        for (std::size_t f = 0; f < F; ++f) {
          double acc = b_[f];
          const double* wf = w_.data.data() + f * C * s.kernel;
          for (std::size_t k = 0; k < s.kernel; ++k) {
            const std::ptrdiff_t j =
                static_cast<std::ptrdiff_t>(o * s.stride + k) - static_cast<std::ptrdiff_t>(s.padding);
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(L)) continue;
            const double* xr = xin + static_cast<std::size_t>(j) * C;
            for (std::size_t c = 0; c < C; ++c) acc += wf[c * s.kernel + k] * xr[c];
          }
          yout[o * F + f] = acc;
        }
      }
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    const auto& s = plan_.spec;
    const std::size_t L = plan_.in_shape[0], C = s.in_channels;
    const std::size_t Lo = plan_.out_shape[0], F = s.out_channels;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      const double* gout = gy.data.data() + bi * out_elems_;
      double* gin = gx.data.data() + bi * in_elems_;
      for (std::size_t o = 0; o < Lo; ++o) {
        for (std::size_t f = 0; f < F; ++f) {
          const double g = gout[o * F + f];
          if (g == 0.0) continue;
          b_.grad[f] += g;
          const double* wf = w_.data.data() + f * C * s.kernel;
          double* gwf = w_.grad.data() + f * C * s.kernel;
          for (std::size_t k = 0; k < s.kernel; ++k) {
            const std::ptrdiff_t j =
                static_cast<std::ptrdiff_t>(o * s.stride + k) - static_cast<std::ptrdiff_t>(s.padding);
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(L)) continue;
            const double* xr = xin + static_cast<std::size_t>(j) * C;
            double* gr = gin + static_cast<std::size_t>(j) * C;
            for (std::size_t c = 0; c < C; ++c) {
              gwf[c * s.kernel + k] += g * xr[c];
              gr[c] += g * wf[c * s.kernel + k];
            }
          }
        }
      }
    }
  }

  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::vector<std::string> param_names() const override { return {"w", "b"}; }
  void init_params(Rng& rng) override {
    glorot_fill(w_, plan_.spec.in_channels * plan_.spec.kernel,
                plan_.spec.out_channels * plan_.spec.kernel, rng);
  }

 private:
  Tensor w_, b_;
};

// Depthwise pass (per-channel kernel) followed by a pointwise 1x1 mix.
class DwSepConv1dStage final : public Stage {
 public:
  explicit DwSepConv1dStage(ShapedLayer plan)
      : Stage(std::move(plan)),
        dw_w_({plan_.spec.in_channels, plan_.spec.kernel}),
        dw_b_({plan_.spec.in_channels}),
        pw_w_({plan_.spec.in_channels, plan_.spec.out_channels}),
        pw_b_({plan_.spec.out_channels}) {}

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const auto& s = plan_.spec;
    const std::size_t C = s.in_channels, F = s.out_channels, Lo = plan_.out_shape[0];
    std::vector<double> mid(Lo * C);
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      double* yout = y.data.data() + bi * out_elems_;
      depthwise(xin, mid.data());
      for (std::size_t o = 0; o < Lo; ++o) {
        const double* mr = mid.data() + o * C;
        double* yr = yout + o * F;
        for (std::size_t f = 0; f < F; ++f) yr[f] = pw_b_[f];
        for (std::size_t c = 0; c < C; ++c) {
          const double mv = mr[c];
          const double* pw = pw_w_.data.data() + c * F;
          for (std::size_t f = 0; f < F; ++f) yr[f] += mv * pw[f];
        }
      }
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    const auto& s = plan_.spec;
    const std::size_t L = plan_.in_shape[0], C = s.in_channels;
    const std::size_t F = s.out_channels, Lo = plan_.out_shape[0];
    std::vector<double> mid(Lo * C), gmid(Lo * C);
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      const double* gout = gy.data.data() + bi * out_elems_;
      double* gin = gx.data.data() + bi * in_elems_;
      depthwise(xin, mid.data());
      std::fill(gmid.begin(), gmid.end(), 0.0);
      // Pointwise pass gradients.
      for (std::size_t o = 0; o < Lo; ++o) {
        const double* gr = gout + o * F;
        const double* mr = mid.data() + o * C;
        double* gmr = gmid.data() + o * C;
        for (std::size_t f = 0; f < F; ++f) pw_b_.grad[f] += gr[f];
        for (std::size_t c = 0; c < C; ++c) {
          const double* pw = pw_w_.data.data() + c * F;
          double* gpw = pw_w_.grad.data() + c * F;
          double acc = 0.0;
          for (std::size_t f = 0; f < F; ++f) {
            acc += gr[f] * pw[f];
            gpw[f] += mr[c] * gr[f];
          }
          gmr[c] += acc;
        }
      }
      // Depthwise pass gradients.
      for (std::size_t o = 0; o < Lo; ++o) {
        const double* gmr = gmid.data() + o * C;
        for (std::size_t c = 0; c < C; ++c) {
          const double g = gmr[c];
          if (g == 0.0) continue;
          dw_b_.grad[c] += g;
          for (std::size_t k = 0; k < s.kernel; ++k) {
            const std::ptrdiff_t j =
                static_cast<std::ptrdiff_t>(o * s.stride + k) - static_cast<std::ptrdiff_t>(s.padding);
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(L)) continue;
            dw_w_.grad[c * s.kernel + k] += g * xin[static_cast<std::size_t>(j) * C + c];
            gin[static_cast<std::size_t>(j) * C + c] += g * dw_w_[c * s.kernel + k];
          }
        }
      }
    }
  }

  std::vector<Tensor*> params() override { return {&dw_w_, &dw_b_, &pw_w_, &pw_b_}; }
  std::vector<std::string> param_names() const override { return {"dw_w", "dw_b", "pw_w", "pw_b"}; }
  void init_params(Rng& rng) override {
    glorot_fill(dw_w_, plan_.spec.kernel, plan_.spec.kernel, rng);
    glorot_fill(pw_w_, plan_.spec.in_channels, plan_.spec.out_channels, rng);
  }

 private:
  void depthwise(const double* xin, double* mid) const {
    const auto& s = plan_.spec;
    const std::size_t L = plan_.in_shape[0], C = s.in_channels, Lo = plan_.out_shape[0];
    for (std::size_t o = 0; o < Lo; ++o) {
      double* mr = mid + o * C;
      for (std::size_t c = 0; c < C; ++c) mr[c] = dw_b_[c];
      for (std::size_t k = 0; k < s.kernel; ++k) {
        const std::ptrdiff_t j =
            static_cast<std::ptrdiff_t>(o * s.stride + k) - static_cast<std::ptrdiff_t>(s.padding);
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(L)) continue;
        const double* xr = xin + static_cast<std::size_t>(j) * C;
        for (std::size_t c = 0; c < C; ++c) mr[c] += dw_w_[c * s.kernel + k] * xr[c];
      }
    }
  }

  Tensor dw_w_, dw_b_, pw_w_, pw_b_;
};

class Conv2dStage final : public Stage {
 public:
  explicit Conv2dStage(ShapedLayer plan)
      : Stage(std::move(plan)),
        w_({plan_.spec.out_channels, plan_.spec.in_channels, plan_.spec.kernel_h,
            plan_.spec.kernel_w}),
        b_({plan_.spec.out_channels}) {}

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const auto& s = plan_.spec;
    const std::size_t C = s.in_channels, H = plan_.in_shape[1], W = plan_.in_shape[2];
    const std::size_t F = s.out_channels, Ho = plan_.out_shape[1], Wo = plan_.out_shape[2];
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      double* yout = y.data.data() + bi * out_elems_;
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t i = 0; i < Ho; ++i) {
          for (std::size_t j = 0; j < Wo; ++j) {
            double acc = b_[f];
            for (std::size_t c = 0; c < C; ++c) {
              const double* xc = xin + c * H * W;
              const double* wf = w_.data.data() + ((f * C + c) * s.kernel_h) * s.kernel_w;
              for (std::size_t u = 0; u < s.kernel_h; ++u) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * s.stride + u) -
                                         static_cast<std::ptrdiff_t>(s.padding);
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t v = 0; v < s.kernel_w; ++v) {
                  const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(j * s.stride + v) -
                                           static_cast<std::ptrdiff_t>(s.padding);
                  if (q < 0 || q >= static_cast<std::ptrdiff_t>(W)) continue;
                  acc += wf[u * s.kernel_w + v] *
                         xc[static_cast<std::size_t>(r) * W + static_cast<std::size_t>(q)];
                }
              }
            }
            yout[(f * Ho + i) * Wo + j] = acc;
          }
        }
      }
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    const auto& s = plan_.spec;
    const std::size_t C = s.in_channels, H = plan_.in_shape[1], W = plan_.in_shape[2];
    const std::size_t F = s.out_channels, Ho = plan_.out_shape[1], Wo = plan_.out_shape[2];
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      const double* gout = gy.data.data() + bi * out_elems_;
      double* gin = gx.data.data() + bi * in_elems_;
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t i = 0; i < Ho; ++i) {
          for (std::size_t j = 0; j < Wo; ++j) {
            const double g = gout[(f * Ho + i) * Wo + j];
            if (g == 0.0) continue;
            b_.grad[f] += g;
            for (std::size_t c = 0; c < C; ++c) {
              const double* xc = xin + c * H * W;
              double* gc = gin + c * H * W;
              const double* wf = w_.data.data() + ((f * C + c) * s.kernel_h) * s.kernel_w;
              double* gwf = w_.grad.data() + ((f * C + c) * s.kernel_h) * s.kernel_w;
              for (std::size_t u = 0; u < s.kernel_h; ++u) {
                const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * s.stride + u) -
                                         static_cast<std::ptrdiff_t>(s.padding);
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t v = 0; v < s.kernel_w; ++v) {
                  const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(j * s.stride + v) -
                                           static_cast<std::ptrdiff_t>(s.padding);
                  if (q < 0 || q >= static_cast<std::ptrdiff_t>(W)) continue;
                  const std::size_t idx =
                      static_cast<std::size_t>(r) * W + static_cast<std::size_t>(q);
                  gwf[u * s.kernel_w + v] += g * xc[idx];
                  gc[idx] += g * wf[u * s.kernel_w + v];
                }
              }
            }
          }
        }
      }
    }
  }

  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::vector<std::string> param_names() const override { return {"w", "b"}; }
  void init_params(Rng& rng) override {
    const std::size_t k2 = plan_.spec.kernel_h * plan_.spec.kernel_w;
    glorot_fill(w_, plan_.spec.in_channels * k2, plan_.spec.out_channels * k2, rng);
  }

 private:
  Tensor w_, b_;
};

class MaxPool1dStage final : public Stage {
 public:
  using Stage::Stage;

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const auto& s = plan_.spec;
    const std::size_t C = plan_.in_shape[1], Lo = plan_.out_shape[0];
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      double* yout = y.data.data() + bi * out_elems_;
      for (std::size_t o = 0; o < Lo; ++o) {
        for (std::size_t c = 0; c < C; ++c) {
          double best = xin[(o * s.stride) * C + c];
          for (std::size_t k = 1; k < s.kernel; ++k)
            best = std::max(best, xin[(o * s.stride + k) * C + c]);
          yout[o * C + c] = best;
        }
      }
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    const auto& s = plan_.spec;
    const std::size_t C = plan_.in_shape[1], Lo = plan_.out_shape[0];
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      const double* gout = gy.data.data() + bi * out_elems_;
      double* gin = gx.data.data() + bi * in_elems_;
      for (std::size_t o = 0; o < Lo; ++o) {
        for (std::size_t c = 0; c < C; ++c) {
          // Ties route to the first maximal element.
          std::size_t arg = o * s.stride;
          double best = xin[arg * C + c];
          for (std::size_t k = 1; k < s.kernel; ++k) {
            const std::size_t idx = o * s.stride + k;
            if (xin[idx * C + c] > best) {
              best = xin[idx * C + c];
              arg = idx;
            }
          }
          gin[arg * C + c] += gout[o * C + c];
        }
      }
    }
  }
};

class GlobalAvgPoolStage final : public Stage {
 public:
  using Stage::Stage;

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const std::size_t C = plan_.out_shape[0];
    const std::size_t spatial = in_elems_ / C;
    const bool channels_last = plan_.in_shape.size() == 2;  // [L, C]
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xin = x.data.data() + bi * in_elems_;
      double* yout = y.data.data() + bi * out_elems_;
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        if (channels_last) {
          for (std::size_t t = 0; t < spatial; ++t) acc += xin[t * C + c];
        } else {
          for (std::size_t t = 0; t < spatial; ++t) acc += xin[c * spatial + t];
        }
        yout[c] = acc / static_cast<double>(spatial);
      }
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    (void)x;
    const std::size_t C = plan_.out_shape[0];
    const std::size_t spatial = in_elems_ / C;
    const bool channels_last = plan_.in_shape.size() == 2;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* gout = gy.data.data() + bi * out_elems_;
      double* gin = gx.data.data() + bi * in_elems_;
      for (std::size_t c = 0; c < C; ++c) {
        const double g = gout[c] / static_cast<double>(spatial);
        if (channels_last) {
          for (std::size_t t = 0; t < spatial; ++t) gin[t * C + c] += g;
        } else {
          for (std::size_t t = 0; t < spatial; ++t) gin[c * spatial + t] += g;
        }
      }
    }
  }
};

class ActivationStage final : public Stage {
 public:
  using Stage::Stage;

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    const std::size_t n = batch * in_elems_;
    switch (plan_.spec.fn) {
      case ActivationFn::relu:
        for (std::size_t i = 0; i < n; ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : 0.0;
        break;
      case ActivationFn::sigmoid:
        for (std::size_t i = 0; i < n; ++i) y.data[i] = stable_sigmoid(x.data[i]);
        break;
      case ActivationFn::tanh:
        for (std::size_t i = 0; i < n; ++i) y.data[i] = std::tanh(x.data[i]);
        break;
    }
  }

  void backward(const Tensor& x, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    const std::size_t n = batch * in_elems_;
    switch (plan_.spec.fn) {
      case ActivationFn::relu:
        for (std::size_t i = 0; i < n; ++i) gx.data[i] += x.data[i] > 0 ? gy.data[i] : 0.0;
        break;
      case ActivationFn::sigmoid:
        for (std::size_t i = 0; i < n; ++i) {
          const double p = stable_sigmoid(x.data[i]);
          gx.data[i] += gy.data[i] * p * (1.0 - p);
        }
        break;
      case ActivationFn::tanh:
        for (std::size_t i = 0; i < n; ++i) {
          const double t = std::tanh(x.data[i]);
          gx.data[i] += gy.data[i] * (1.0 - t * t);
        }
        break;
    }
  }
};

class FlattenStage final : public Stage {
 public:
  using Stage::Stage;

  void forward(const Tensor& x, Tensor& y, std::size_t batch) const override {
    std::copy(x.data.begin(), x.data.begin() + batch * in_elems_, y.data.begin());
  }

  void backward(const Tensor&, const Tensor& gy, Tensor& gx, std::size_t batch) override {
    for (std::size_t i = 0; i < batch * in_elems_; ++i) gx.data[i] += gy.data[i];
  }
};

inline std::unique_ptr<Stage> make_stage(ShapedLayer plan) {
  switch (plan.spec.kind) {
    case LayerKind::dense: return std::make_unique<DenseStage>(std::move(plan));
    case LayerKind::conv1d: return std::make_unique<Conv1dStage>(std::move(plan));
    case LayerKind::depthwise_separable_conv1d:
      return std::make_unique<DwSepConv1dStage>(std::move(plan));
    case LayerKind::conv2d: return std::make_unique<Conv2dStage>(std::move(plan));
    case LayerKind::maxpool1d: return std::make_unique<MaxPool1dStage>(std::move(plan));
    case LayerKind::global_avg_pool: return std::make_unique<GlobalAvgPoolStage>(std::move(plan));
    case LayerKind::activation: return std::make_unique<ActivationStage>(std::move(plan));
    case LayerKind::flatten: return std::make_unique<FlattenStage>(std::move(plan));
  }
  throw Error("make_stage: unknown layer kind");
}

}  // namespace nn_detail

// ---------------------------------------------------------------------------
// Model

class Model {
 public:
  Model() = default;

  // Builds the stage pipeline and initializes weights (Glorot-uniform,
  // biases zero) from the given seed.
  static Model build(const ModelSpec& spec, std::uint64_t seed) {
    Model m;
    m.spec_ = spec;
    for (auto& plan : plan_stages(spec)) m.stages_.push_back(nn_detail::make_stage(std::move(plan)));
    Rng rng(seed);
    for (auto& st : m.stages_) {
      st->init_params(rng);
      for (Tensor* p : st->params()) p->alloc_grad();
    }
    return m;
  }

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::size_t>& input_shape() const { return spec_.input_shape; }

  std::vector<std::size_t> output_shape() const {
    if (stages_.empty()) return spec_.input_shape;
    return stages_.back()->plan().out_shape;
  }

  std::size_t batch_of(const Tensor& x) const {
    const std::size_t sample = Tensor::numel_of(spec_.input_shape);
    if (x.shape.size() != spec_.input_shape.size() + 1 || x.numel() % sample != 0 ||
        !std::equal(spec_.input_shape.begin(), spec_.input_shape.end(), x.shape.begin() + 1))
      throw Error("forward: batch shape " + shape_string(x.shape) + " does not match model input " +
                  shape_string(spec_.input_shape));
    return x.shape[0];
  }

  // Runs the batch through every stage, caching inputs for backward().
  const Tensor& forward(const Tensor& batch) {
    const std::size_t b = batch_of(batch);
    cache_.clear();
    cache_.reserve(stages_.size() + 1);
    cache_.push_back(batch);
    for (auto& st : stages_) {
      Tensor y = st->make_output(b);
      st->forward(cache_.back(), y, b);
      cache_.push_back(std::move(y));
    }
    return cache_.back();
  }

  // Accumulates parameter gradients for the last forward() batch and returns
  // the gradient w.r.t. the inputs.
  Tensor backward(const Tensor& grad_output) {
    if (cache_.empty()) throw Error("backward: no forward pass cached");
    const std::size_t b = cache_.front().shape[0];
    Tensor gy = grad_output;
    for (std::size_t i = stages_.size(); i-- > 0;) {
      Tensor gx(cache_[i].shape);
      stages_[i]->backward(cache_[i], gy, gx, b);
      gy = std::move(gx);
    }
    return gy;
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (auto& st : stages_) {
      for (Tensor* p : st->params()) out.push_back(p);
    }
    return out;
  }

  // Stable "<stage index>.<param name>" labels, aligned with parameters().
  std::vector<std::string> parameter_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      for (const auto& n : stages_[i]->param_names())
        out.push_back(std::to_string(i) + "." + n);
    }
    return out;
  }

  void zero_grad() {
    for (Tensor* p : parameters()) p->zero_grad();
  }

  std::vector<std::vector<double>> snapshot_params() {
    std::vector<std::vector<double>> out;
    for (Tensor* p : parameters()) out.push_back(p->data);
    return out;
  }
  void restore_params(const std::vector<std::vector<double>>& snap) {
    auto ps = parameters();
    if (snap.size() != ps.size()) throw Error("restore_params: snapshot mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->data = snap[i];
  }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<nn_detail::Stage>> stages_;
  std::vector<Tensor> cache_;
};

}  // namespace tadkit
