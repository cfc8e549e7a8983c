#pragma once

// Layer-wise inference cost estimates for edge deployment budgeting.
//
// Conventions: multiply-accumulate counts cover weight multiplies only
// (pooling, activations and reshapes are free); parameters include biases;
// activations live in RAM and weights in ROM, both at 4 bytes per element.
// Peak RAM assumes sequential execution with just the current stage's input
// and output buffers live.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/nn.hpp"

namespace tadkit {

inline std::uint64_t layer_macs(const LayerSpec& layer, const std::vector<std::size_t>& in_shape) {
  const auto out_shape = layer_output_shape(layer, in_shape, "layer_macs");
  switch (layer.kind) {
    case LayerKind::dense:
      return static_cast<std::uint64_t>(layer.in) * layer.out;
    case LayerKind::conv1d:
      return static_cast<std::uint64_t>(out_shape[0]) * layer.out_channels * layer.in_channels *
             layer.kernel;
    case LayerKind::depthwise_separable_conv1d:
      return static_cast<std::uint64_t>(out_shape[0]) * layer.in_channels * layer.kernel +
             static_cast<std::uint64_t>(out_shape[0]) * layer.in_channels * layer.out_channels;
    case LayerKind::conv2d:
      return static_cast<std::uint64_t>(out_shape[1]) * out_shape[2] * layer.out_channels *
             layer.in_channels * layer.kernel_h * layer.kernel_w;
    case LayerKind::maxpool1d:
    case LayerKind::global_avg_pool:
    case LayerKind::activation:
    case LayerKind::flatten:
      return 0;
  }
  return 0;
}

inline std::uint64_t layer_params(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::dense:
      return static_cast<std::uint64_t>(layer.in) * layer.out + layer.out;
    case LayerKind::conv1d:
      return static_cast<std::uint64_t>(layer.out_channels) * layer.in_channels * layer.kernel +
             layer.out_channels;
    case LayerKind::depthwise_separable_conv1d:
      return static_cast<std::uint64_t>(layer.in_channels) * layer.kernel + layer.in_channels +
             static_cast<std::uint64_t>(layer.in_channels) * layer.out_channels +
             layer.out_channels;
    case LayerKind::conv2d:
      return static_cast<std::uint64_t>(layer.out_channels) * layer.in_channels * layer.kernel_h *
                 layer.kernel_w +
             layer.out_channels;
    case LayerKind::maxpool1d:
    case LayerKind::global_avg_pool:
    case LayerKind::activation:
    case LayerKind::flatten:
      return 0;
  }
  return 0;
}

// Peak activation memory in bytes: the largest {stage input + stage output}
// pair over the schedule. A model with no stages still holds its I/O buffer
// twice (input and identity output).
inline std::uint64_t peak_ram(const ModelSpec& model) {
  const auto plan = plan_stages(model);
  const std::uint64_t input_elems = Tensor::numel_of(model.input_shape);
  if (plan.empty()) return 2 * input_elems * 4;
  std::uint64_t peak = 0;
  for (const auto& stage : plan) {
    const std::uint64_t live =
        Tensor::numel_of(stage.in_shape) + Tensor::numel_of(stage.out_shape);
    peak = std::max(peak, live * 4);
  }
  return peak;
}

struct LayerCost {
  std::size_t index = 0;
  std::string kind;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  std::uint64_t activation_bytes = 0;  // output buffer at 4 bytes/element
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t total_macs = 0;
  std::uint64_t total_params = 0;
  std::uint64_t peak_ram_bytes = 0;
  std::uint64_t ram_kb = 0;  // ceil(peak_ram_bytes / 1024)
  std::uint64_t rom_kb = 0;  // ceil(total_params * 4 / 1024)
};

inline CostReport profile(const ModelSpec& model) {
  const auto plan = plan_stages(model);
  CostReport report;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    LayerCost cost;
    cost.index = i;
    cost.kind = to_string(plan[i].spec.kind);
    if (plan[i].spec.kind == LayerKind::activation)
      cost.kind += "(" + to_string(plan[i].spec.fn) + ")";
    cost.macs = layer_macs(plan[i].spec, plan[i].in_shape);
    cost.params = layer_params(plan[i].spec);
    cost.activation_bytes = Tensor::numel_of(plan[i].out_shape) * 4;
    report.total_macs += cost.macs;
    report.total_params += cost.params;
    report.layers.push_back(std::move(cost));
  }
  report.peak_ram_bytes = peak_ram(model);
  report.ram_kb = (report.peak_ram_bytes + 1023) / 1024;
  report.rom_kb = (report.total_params * 4 + 1023) / 1024;
  return report;
}

inline void to_json(json& j, const LayerCost& c) {
  j = json{{"index", c.index},
           {"kind", c.kind},
           {"macs", c.macs},
           {"params", c.params},
           {"activation_bytes", c.activation_bytes}};
}

inline void to_json(json& j, const CostReport& r) {
  j = json{{"layers", r.layers},         {"total_macs", r.total_macs},
           {"total_params", r.total_params}, {"peak_ram_bytes", r.peak_ram_bytes},
           {"ram_kb", r.ram_kb},         {"rom_kb", r.rom_kb}};
}

// ---------------------------------------------------------------------------
// Platform budgets

struct PlatformBudget {
  std::string name;
  std::uint64_t ram_bytes = 0;
  std::uint64_t rom_bytes = 0;

  void validate() const {
    if (ram_bytes == 0 || rom_bytes == 0)
      throw ConfigError("platform: ram_bytes and rom_bytes must be positive");
  }
};

inline void to_json(json& j, const PlatformBudget& p) {
  j = json{{"name", p.name}, {"ram_bytes", p.ram_bytes}, {"rom_bytes", p.rom_bytes}};
}
inline void from_json(const json& j, PlatformBudget& p) {
  check_keys(j, "platform", {"name", "ram_bytes", "rom_bytes"});
  j.at("name").get_to(p.name);
  j.at("ram_bytes").get_to(p.ram_bytes);
  j.at("rom_bytes").get_to(p.rom_bytes);
  p.validate();
}

// Binary units throughout (1 MB = 1024 KB, 1 GB = 1024 MB).
inline PlatformBudget platform_by_name(const std::string& name) {
  constexpr std::uint64_t MB = 1024ull * 1024ull;
  constexpr std::uint64_t GB = 1024ull * MB;
  if (name == "cubesat") return {"cubesat", 16 * MB, 64 * MB};
  if (name == "ops-sat") return {"ops-sat", 1 * GB, 8 * GB};
  throw ConfigError("platform: unknown platform '" + name + "' (expected cubesat or ops-sat)");
}

// Percentage of the platform budget, rounded half-up to two decimals.
// Values that round to 0.00 render as "< 0.01".
inline std::string budget_pct(double kb, std::uint64_t platform_bytes) {
  const double platform_kb = static_cast<double>(platform_bytes) / 1024.0;
  const double pct = 100.0 * kb / platform_kb;
  const auto cents = static_cast<long long>(std::floor(pct * 100.0 + 0.5));
  if (cents == 0) return "< 0.01";
  std::string frac = std::to_string(cents % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return std::to_string(cents / 100) + "." + frac;
}

struct BudgetReport {
  std::string platform;
  std::string ram_pct;
  std::string rom_pct;
};

inline BudgetReport budget_report(double ram_kb, double rom_kb, const PlatformBudget& platform) {
  platform.validate();
  if (!(ram_kb > 0) || !(rom_kb > 0))
    throw ConfigError("budget_report: ram_kb and rom_kb must be positive");
  return {platform.name, budget_pct(ram_kb, platform.ram_bytes),
          budget_pct(rom_kb, platform.rom_bytes)};
}

}  // namespace tadkit
