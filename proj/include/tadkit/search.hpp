#pragma once

// Multi-objective architecture search over (validation loss, MACs).
//
// Candidate configurations are drawn from a bounded space, oversized ones
// are pruned against a baseline parameter count before any training, and
// survivors train on the fixed step budget. The Pareto front of completed
// trials (minimize both objectives) and its knee point - the member closest
// to the origin after per-objective min-max normalization - summarize the
// outcome.
//
// Trials are independent: each derives its own seeds from (master seed,
// trial id), and configurations are pre-sampled before any worker starts,
// so results do not depend on scheduling or worker count.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "tadkit/costmodel.hpp"
#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/nn.hpp"
#include "tadkit/pipeline.hpp"
#include "tadkit/rng.hpp"
#include "tadkit/train.hpp"

namespace tadkit {

struct IntRange {
  std::size_t min = 1;
  std::size_t max = 1;

  void validate(const std::string& ctx) const {
    if (min < 1) throw ConfigError(ctx + ".min: must be >= 1");
    if (max < min) throw ConfigError(ctx + ": min must be <= max");
  }
};

inline void to_json(json& j, const IntRange& r) { j = json{{"min", r.min}, {"max", r.max}}; }
inline void from_json(const json& j, IntRange& r) {
  check_keys(j, "range", {"min", "max"});
  j.at("min").get_to(r.min);
  j.at("max").get_to(r.max);
}

struct SearchSpace {
  TaskKind family = TaskKind::forecast;
  IntRange n_layers{1, 3};
  IntRange filters{4, 16};
  std::vector<std::size_t> kernel_sizes{3, 5, 7};
  std::vector<ActivationFn> activations{ActivationFn::relu, ActivationFn::tanh};

  void validate() const {
    n_layers.validate("space.n_layers");
    filters.validate("space.filters");
    if (kernel_sizes.empty()) throw ConfigError("space.kernel_sizes: must be non-empty");
    for (auto k : kernel_sizes) {
      if (k < 1) throw ConfigError("space.kernel_sizes: entries must be >= 1");
    }
    if (activations.empty()) throw ConfigError("space.activations: must be non-empty");
  }
};

inline void to_json(json& j, const SearchSpace& s) {
  std::vector<std::string> acts;
  for (auto a : s.activations) acts.push_back(to_string(a));
  j = json{{"family", to_string(s.family)},
           {"n_layers", s.n_layers},
           {"filters", s.filters},
           {"kernel_sizes", s.kernel_sizes},
           {"activations", acts}};
}
inline void from_json(const json& j, SearchSpace& s) {
  check_keys(j, "space", {"family"}, {"n_layers", "filters", "kernel_sizes", "activations"});
  s.family = task_from_string(j.at("family").get<std::string>());
  if (j.contains("n_layers")) j.at("n_layers").get_to(s.n_layers);
  if (j.contains("filters")) j.at("filters").get_to(s.filters);
  if (j.contains("kernel_sizes")) j.at("kernel_sizes").get_to(s.kernel_sizes);
  if (j.contains("activations")) {
    s.activations.clear();
    for (const auto& a : j.at("activations"))
      s.activations.push_back(activation_from_string(a.get<std::string>()));
  }
  s.validate();
}

// One sampled hyperparameter vector.
struct ArchitectureConfig {
  TaskKind family = TaskKind::forecast;
  std::size_t n_layers = 1;
  std::vector<std::size_t> filters;       // per layer
  std::vector<std::size_t> kernel_sizes;  // per layer
  ActivationFn activation = ActivationFn::relu;
};

inline void to_json(json& j, const ArchitectureConfig& c) {
  j = json{{"family", to_string(c.family)},
           {"n_layers", c.n_layers},
           {"filters", c.filters},
           {"kernel_sizes", c.kernel_sizes},
           {"activation", to_string(c.activation)}};
}
inline void from_json(const json& j, ArchitectureConfig& c) {
  check_keys(j, "config", {"family", "n_layers", "filters", "kernel_sizes", "activation"});
  c.family = task_from_string(j.at("family").get<std::string>());
  j.at("n_layers").get_to(c.n_layers);
  j.at("filters").get_to(c.filters);
  j.at("kernel_sizes").get_to(c.kernel_sizes);
  c.activation = activation_from_string(j.at("activation").get<std::string>());
}

// Dimensions the materialized model must fit.
struct TaskDims {
  std::size_t window_length = 0;  // forecast/classify
  std::size_t n_channels = 0;
  std::size_t gaf_resolution = 0;  // image
};

// Expands a sampled configuration into a concrete layer stack:
//   forecast/classify: conv1d front, depthwise-separable follow-ups,
//                      then flatten+dense (forecast) or GAP+dense+sigmoid
//   image:             stride-2 conv2d stack, GAP, dense, sigmoid
inline ModelSpec materialize(const ArchitectureConfig& config, const TaskDims& dims) {
  if (config.filters.size() != config.n_layers || config.kernel_sizes.size() != config.n_layers)
    throw ConfigError("config: filters/kernel_sizes must have n_layers entries");
  ModelSpec spec;
  if (config.family == TaskKind::image) {
    spec.input_shape = {dims.n_channels, dims.gaf_resolution, dims.gaf_resolution};
    std::size_t channels = dims.n_channels;
    for (std::size_t i = 0; i < config.n_layers; ++i) {
      const std::size_t k = config.kernel_sizes[i];
      spec.layers.push_back(
          LayerSpec::conv2d_of(channels, config.filters[i], k, k, /*stride=*/2, (k - 1) / 2));
      spec.layers.push_back(LayerSpec::activation_of(config.activation));
      channels = config.filters[i];
    }
    spec.layers.push_back(LayerSpec::global_avg_pool_of());
    spec.layers.push_back(LayerSpec::dense_of(channels, 1));
    spec.head = {HeadKind::binary_classifier, 1};
    return spec;
  }

  spec.input_shape = {dims.window_length, dims.n_channels};
  std::size_t length = dims.window_length;
  std::size_t channels = dims.n_channels;
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const std::size_t k = config.kernel_sizes[i];
    LayerSpec conv = i == 0 ? LayerSpec::conv1d_of(channels, config.filters[i], k, 1, (k - 1) / 2)
                            : LayerSpec::dwsep_conv1d_of(channels, config.filters[i], k, 1, (k - 1) / 2);
    length = conv_out_extent(length, k, 1, (k - 1) / 2, "materialize");
    spec.layers.push_back(conv);
    spec.layers.push_back(LayerSpec::activation_of(config.activation));
    channels = config.filters[i];
  }
  if (config.family == TaskKind::forecast) {
    spec.layers.push_back(LayerSpec::flatten_of());
    spec.layers.push_back(LayerSpec::dense_of(length * channels, dims.n_channels));
    spec.head = {HeadKind::regression, dims.n_channels};
  } else {
    spec.layers.push_back(LayerSpec::global_avg_pool_of());
    spec.layers.push_back(LayerSpec::dense_of(channels, 1));
    spec.head = {HeadKind::binary_classifier, 1};
  }
  return spec;
}

enum class TrialStatus { completed, pruned, failed };

inline std::string to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::completed: return "completed";
    case TrialStatus::pruned: return "pruned";
    case TrialStatus::failed: return "failed";
  }
  return "?";
}
inline TrialStatus trial_status_from_string(const std::string& s) {
  if (s == "completed") return TrialStatus::completed;
  if (s == "pruned") return TrialStatus::pruned;
  if (s == "failed") return TrialStatus::failed;
  throw ConfigError("trial.status: unknown status '" + s + "'");
}

struct Trial {
  std::size_t id = 0;
  ArchitectureConfig config;
  TrialStatus status = TrialStatus::failed;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // completed only
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
};

inline void to_json(json& j, const Trial& t) {
  j = json{{"id", t.id},
           {"config", t.config},
           {"status", to_string(t.status)},
           {"macs", t.macs},
           {"params", t.params}};
  if (t.status == TrialStatus::completed) j["val_loss"] = t.val_loss;
}
inline void from_json(const json& j, Trial& t) {
  check_keys(j, "trial", {"id", "config", "status", "macs", "params"}, {"val_loss"});
  j.at("id").get_to(t.id);
  j.at("config").get_to(t.config);
  t.status = trial_status_from_string(j.at("status").get<std::string>());
  j.at("macs").get_to(t.macs);
  j.at("params").get_to(t.params);
  if (t.status == TrialStatus::completed) t.val_loss = j.at("val_loss").get<double>();
}

// ---------------------------------------------------------------------------
// Sampling

// Pluggable sampling strategy. `history` carries finished trials so adaptive
// samplers can exploit it; the default uniform sampler ignores it.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual ArchitectureConfig sample(const SearchSpace& space, Rng& rng,
                                    const std::vector<Trial>& history) = 0;
};

class RandomSampler final : public Sampler {
 public:
  ArchitectureConfig sample(const SearchSpace& space, Rng& rng,
                            const std::vector<Trial>& /*history*/) override {
    space.validate();
    ArchitectureConfig c;
    c.family = space.family;
    c.n_layers = space.n_layers.min +
                 static_cast<std::size_t>(rng.below(space.n_layers.max - space.n_layers.min + 1));
    for (std::size_t i = 0; i < c.n_layers; ++i) {
      c.filters.push_back(space.filters.min + static_cast<std::size_t>(rng.below(
                                                  space.filters.max - space.filters.min + 1)));
      c.kernel_sizes.push_back(
          space.kernel_sizes[static_cast<std::size_t>(rng.below(space.kernel_sizes.size()))]);
    }
    c.activation = space.activations[static_cast<std::size_t>(rng.below(space.activations.size()))];
    return c;
  }
};

// Prune iff the candidate's parameter count strictly exceeds the baseline.
inline bool prune_by_size(std::uint64_t candidate_params, std::uint64_t baseline_params) {
  if (baseline_params == 0) throw ConfigError("prune_by_size: baseline params must be positive");
  return candidate_params > baseline_params;
}

// ---------------------------------------------------------------------------
// Trial execution

struct TrialContext {
  Dataset train_set;
  Dataset val_set;
  TaskDims dims;
  LossKind loss = LossKind::mse;
};

// Runs one configuration at the fixed budget. The objective is the best
// (minimum) validation loss over the periodic evaluations. Oversized configs
// are pruned before training; build or divergence failures are recorded in
// the status rather than thrown.
inline Trial run_trial(std::size_t id, const ArchitectureConfig& config, const TrialContext& ctx,
                       const TrainConfig& base_cfg, std::uint64_t baseline_params,
                       std::uint64_t master_seed) {
  Trial trial;
  trial.id = id;
  trial.config = config;
  ModelSpec spec;
  try {
    spec = materialize(config, ctx.dims);
    const CostReport cost = profile(spec);
    trial.macs = cost.total_macs;
    trial.params = cost.total_params;
  } catch (const std::exception&) {
    trial.status = TrialStatus::failed;
    return trial;
  }
  if (prune_by_size(trial.params, baseline_params)) {
    trial.status = TrialStatus::pruned;
    return trial;
  }
  try {
    Model model = Model::build(spec, derive_seed(master_seed, "trial-init", id));
    TrainConfig cfg = base_cfg;
    cfg.loss = ctx.loss;
    cfg.seed = derive_seed(master_seed, "trial-train", id);
    const TrainResult result = train(model, ctx.train_set, ctx.val_set, cfg);
    trial.status = TrialStatus::completed;
    trial.val_loss = result.best_val_loss;
  } catch (const std::exception&) {
    trial.status = TrialStatus::failed;
  }
  return trial;
}

// ---------------------------------------------------------------------------
// Pareto front and knee point

namespace search_detail {

inline bool dominates(const Trial& a, const Trial& b) {
  const bool no_worse = a.val_loss <= b.val_loss && a.macs <= b.macs;
  const bool better = a.val_loss < b.val_loss || a.macs < b.macs;
  return no_worse && better;
}

}  // namespace search_detail

// Ids of non-dominated completed trials, ascending.
inline std::vector<std::size_t> pareto_front(const std::vector<Trial>& trials) {
  std::vector<const Trial*> completed;
  for (const auto& t : trials) {
    if (t.status == TrialStatus::completed) completed.push_back(&t);
  }
  if (completed.empty()) throw Error("pareto_front: no completed trials");
  std::vector<std::size_t> front;
  for (const Trial* a : completed) {
    bool dominated = false;
    for (const Trial* b : completed) {
      if (b != a && search_detail::dominates(*b, *a)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(a->id);
  }
  std::sort(front.begin(), front.end());
  return front;
}

// Front member closest to the origin after min-max normalizing each
// objective over the front (a constant objective normalizes to all zeros).
// Ties break toward smaller MACs, then smaller id.
inline std::size_t knee_point(const std::vector<Trial>& trials,
                              const std::vector<std::size_t>& front) {
  if (front.empty()) throw Error("knee_point: empty front");
  auto trial_by_id = [&](std::size_t id) -> const Trial& {
    for (const auto& t : trials) {
      if (t.id == id) return t;
    }
    throw Error("knee_point: front references unknown trial " + std::to_string(id));
  };
  double loss_min = std::numeric_limits<double>::infinity(), loss_max = -loss_min;
  double macs_min = std::numeric_limits<double>::infinity(), macs_max = -macs_min;
  for (auto id : front) {
    const Trial& t = trial_by_id(id);
    loss_min = std::min(loss_min, t.val_loss);
    loss_max = std::max(loss_max, t.val_loss);
    macs_min = std::min(macs_min, static_cast<double>(t.macs));
    macs_max = std::max(macs_max, static_cast<double>(t.macs));
  }
  std::size_t best_id = front.front();
  double best_norm = std::numeric_limits<double>::infinity();
  std::uint64_t best_macs = 0;
  for (auto id : front) {
    const Trial& t = trial_by_id(id);
    const double nl = loss_max > loss_min ? (t.val_loss - loss_min) / (loss_max - loss_min) : 0.0;
    const double nm = macs_max > macs_min
                          ? (static_cast<double>(t.macs) - macs_min) / (macs_max - macs_min)
                          : 0.0;
    const double norm = std::sqrt(nl * nl + nm * nm);
    const bool better = norm < best_norm ||
                        (norm == best_norm &&
                         (t.macs < best_macs || (t.macs == best_macs && id < best_id)));
    if (better) {
      best_norm = norm;
      best_id = id;
      best_macs = t.macs;
    }
  }
  return best_id;
}

struct ParetoFront {
  std::vector<std::size_t> members;
  std::size_t knee = 0;
};

inline ParetoFront extract_front(const std::vector<Trial>& trials) {
  ParetoFront f;
  f.members = pareto_front(trials);
  f.knee = knee_point(trials, f.members);
  return f;
}

// CSV plot data: one row per completed trial with its front role.
inline void export_front(const std::vector<Trial>& trials, const ParetoFront& front,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("export_front: cannot write '" + path + "'");
  out << "trial_id,macs,val_loss,role\n";
  for (const auto& t : trials) {
    if (t.status != TrialStatus::completed) continue;
    const char* role = "dominated";
    if (t.id == front.knee) {
      role = "knee";
    } else if (std::find(front.members.begin(), front.members.end(), t.id) !=
               front.members.end()) {
      role = "front";
    }
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), t.val_loss);
    out << t.id << ',' << t.macs << ',' << std::string(buf, ptr) << ',' << role << '\n';
  }
  if (!out) throw Error("export_front: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Orchestration

// Pre-samples n_trials configurations, then runs them on `workers` threads.
// Trial results land in id order regardless of scheduling.
inline std::vector<Trial> run_search(const SearchSpace& space, const TrialContext& ctx,
                                     std::size_t n_trials, const TrainConfig& base_cfg,
                                     std::uint64_t baseline_params, std::uint64_t master_seed,
                                     std::size_t workers = 1, Sampler* sampler = nullptr) {
  space.validate();
  if (n_trials == 0) throw ConfigError("search.n_trials: must be >= 1");
  RandomSampler default_sampler;
  Sampler* s = sampler ? sampler : &default_sampler;

  Rng sample_rng(derive_seed(master_seed, "sampler"));
  std::vector<ArchitectureConfig> configs;
  configs.reserve(n_trials);
  const std::vector<Trial> no_history;
  for (std::size_t i = 0; i < n_trials; ++i) configs.push_back(s->sample(space, sample_rng, no_history));

  std::vector<Trial> trials(n_trials);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_trials) return;
      trials[i] = run_trial(i, configs[i], ctx, base_cfg, baseline_params, master_seed);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return trials;
}

inline void save_trials(const std::vector<Trial>& trials, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_trials: cannot write '" + path + "'");
  for (const auto& t : trials) out << json(t).dump() << '\n';
  if (!out) throw Error("save_trials: write failed for '" + path + "'");
}

inline std::vector<Trial> load_trials(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_trials: cannot open '" + path + "'");
  std::vector<Trial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      trials.push_back(json::parse(line).get<Trial>());
    } catch (const json::exception& e) {
      throw Error("load_trials: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trials;
}

}  // namespace tadkit
