// tadkit - telemetry anomaly detection toolkit.
//
// Subcommands: synth, train, detect, evaluate, gaf, profile, search, report.
// Every command takes a JSON config (--config) validated against a strict
// schema: unknown keys are rejected and error messages name the failing
// field. Exit codes: 0 success, 1 invalid config, 2 runtime failure.
//
// Reproducibility: a single seed (--seed or the config's top-level "seed")
// fans out into per-stage child seeds, so reruns with the same config and
// seed produce byte-identical outputs. Without a master seed, stage-local
// seeds embedded in the config (synthetic.seed, train.seed) apply verbatim.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tadkit/costmodel.hpp"
#include "tadkit/csv.hpp"
#include "tadkit/detectors.hpp"
#include "tadkit/error.hpp"
#include "tadkit/gaf.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/metrics.hpp"
#include "tadkit/model_io.hpp"
#include "tadkit/pipeline.hpp"
#include "tadkit/search.hpp"
#include "tadkit/synthetic.hpp"
#include "tadkit/timeseries.hpp"
#include "tadkit/train.hpp"

namespace {

using namespace tadkit;

struct SeedTree {
  bool has_master = false;
  std::uint64_t master = 0;

  std::uint64_t stage(const char* name, std::uint64_t fallback) const {
    return has_master ? derive_seed(master, name) : fallback;
  }
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: not valid JSON: " + std::string(e.what()));
  }
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(std::string(what) + ": cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(std::string(what) + ": not valid JSON: " + std::string(e.what()));
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

SeedTree seed_tree(const json& cfg, std::optional<std::uint64_t> flag_seed) {
  SeedTree tree;
  if (cfg.is_object() && cfg.contains("seed")) {
    tree.has_master = true;
    tree.master = cfg.at("seed").get<std::uint64_t>();
  }
  if (flag_seed) {
    tree.has_master = true;
    tree.master = *flag_seed;
  }
  return tree;
}

// Shared "data" block: either a CSV path or an inline synthetic spec.
TimeSeries load_data(const json& cfg, const SeedTree& seeds) {
  check_keys(cfg, "data", {}, {"csv", "synthetic"});
  if (cfg.contains("csv") == cfg.contains("synthetic"))
    throw ConfigError("data: exactly one of 'csv' or 'synthetic' required");
  if (cfg.contains("csv")) return load_csv(cfg.at("csv").get<std::string>());
  SyntheticSpec spec = cfg.at("synthetic").get<SyntheticSpec>();
  spec.seed = seeds.stage("synth", spec.seed);
  return synthesize(spec);
}

NormParams resolve_norm(const json& cfg, const TimeSeries& fit_on) {
  if (cfg.contains("norm")) {
    return load_json_file(cfg.at("norm").get<std::string>(), "norm").get<NormParams>();
  }
  return fit_normalizer(fit_on);
}

std::string thousands(std::uint64_t v) {
  std::string raw = std::to_string(v);
  std::string out;
  int count = 0;
  for (auto it = raw.rbegin(); it != raw.rend(); ++it) {
    if (count && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  return std::string(out.rbegin(), out.rend());
}

std::string platform_size_label(std::uint64_t bytes) {
  constexpr std::uint64_t MB = 1024ull * 1024ull;
  constexpr std::uint64_t GB = 1024ull * MB;
  if (bytes % GB == 0) return std::to_string(bytes / GB) + " GB";
  if (bytes % MB == 0) return std::to_string(bytes / MB) + " MB";
  return std::to_string(bytes / 1024) + " KB";
}

std::vector<PlatformBudget> resolve_platforms(const json& cfg) {
  std::vector<PlatformBudget> platforms;
  if (!cfg.contains("platforms")) {
    platforms.push_back(platform_by_name("cubesat"));
    platforms.push_back(platform_by_name("ops-sat"));
    return platforms;
  }
  for (const auto& p : cfg.at("platforms")) {
    if (p.is_string()) {
      platforms.push_back(platform_by_name(p.get<std::string>()));
    } else {
      platforms.push_back(p.get<PlatformBudget>());
    }
  }
  if (platforms.empty()) throw ConfigError("platforms: must be non-empty");
  return platforms;
}

// Columnar text table; first column left-aligned, the rest right-aligned.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      const std::size_t pad = widths[c] - row[c].size();
      if (c == 0) {
        line += row[c] + std::string(pad, ' ');
      } else {
        line += std::string(pad, ' ') + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const json& cfg, const SeedTree& seeds) {
  check_keys(cfg, "synth", {"spec", "out"}, {"seed"});
  SyntheticSpec spec = cfg.at("spec").get<SyntheticSpec>();
  spec.seed = seeds.stage("synth", spec.seed);
  const TimeSeries series = synthesize(spec);
  save_csv(series, cfg.at("out").get<std::string>());
  std::cout << "wrote " << series.n_points() << " points x " << series.n_channels()
            << " channels to " << cfg.at("out").get<std::string>() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TaskData {
  Dataset train_set;
  Dataset val_set;
  TaskKind task = TaskKind::forecast;
  LossKind loss = LossKind::mse;
  NormParams norm;
};

TaskData assemble_task_data(const json& cfg, const SeedTree& seeds) {
  const TimeSeries raw = load_data(cfg.at("data"), seeds);
  const SplitFractions fractions =
      cfg.contains("split") ? cfg.at("split").get<SplitFractions>() : SplitFractions{};
  const SplitSeries parts = split(raw, fractions);

  TaskData data;
  data.task = task_from_string(cfg.at("task").get<std::string>());
  data.norm = cfg.contains("norm")
                  ? load_json_file(cfg.at("norm").get<std::string>(), "norm").get<NormParams>()
                  : fit_normalizer(parts.train);
  const TimeSeries train_series = apply_normalizer(parts.train, data.norm);
  const TimeSeries val_series = apply_normalizer(parts.val, data.norm);

  const WindowSpec window =
      cfg.contains("window") ? cfg.at("window").get<WindowSpec>() : WindowSpec{};
  switch (data.task) {
    case TaskKind::forecast:
      data.train_set = build_forecast_dataset(train_series, window.length);
      data.val_set = build_forecast_dataset(val_series, window.length);
      data.loss = LossKind::mse;
      break;
    case TaskKind::classify:
      data.train_set = build_classify_dataset(train_series, window);
      data.val_set = build_classify_dataset(val_series, window);
      data.loss = LossKind::weighted_bce;
      break;
    case TaskKind::image: {
      const GafConfig gaf = cfg.contains("gaf") ? cfg.at("gaf").get<GafConfig>() : GafConfig{};
      data.train_set = build_image_dataset(train_series, window, gaf);
      data.val_set = build_image_dataset(val_series, window, gaf);
      data.loss = LossKind::weighted_bce;
      break;
    }
  }
  return data;
}

int cmd_train(const json& cfg, const SeedTree& seeds) {
  check_keys(cfg, "train", {"data", "task", "model", "out_weights"},
             {"seed", "split", "window", "gaf", "norm", "train", "out_trace", "out_norm"});
  const TaskData data = assemble_task_data(cfg, seeds);

  const ModelSpec spec = cfg.at("model").get<ModelSpec>();
  Model model = Model::build(spec, seeds.stage("model-init", 0));
  TrainConfig tc = cfg.contains("train") ? cfg.at("train").get<TrainConfig>() : TrainConfig{};
  tc.loss = data.loss;
  tc.seed = seeds.stage("train", tc.seed);

  const TrainResult result = train(model, data.train_set, data.val_set, tc);
  save_weights(model, cfg.at("out_weights").get<std::string>());

  if (cfg.contains("out_trace")) {
    json trace = json::array();
    for (const auto& p : result.trace)
      trace.push_back({{"step", p.step}, {"val_loss", p.val_loss}});
    write_json(cfg.at("out_trace").get<std::string>(),
               json{{"steps", tc.steps},
                    {"eval_every", tc.eval_every},
                    {"trace", trace},
                    {"best_val_loss", result.best_val_loss},
                    {"best_step", result.best_step}});
  }
  if (cfg.contains("out_norm")) write_json(cfg.at("out_norm").get<std::string>(), json(data.norm));
  std::cout << "best validation loss " << result.best_val_loss << " at step " << result.best_step
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect

int cmd_detect(const json& cfg, const SeedTree& seeds) {
  check_keys(cfg, "detect", {"data", "pipeline", "weights", "out"},
             {"seed", "norm", "window", "threshold", "prob_threshold", "gaf"});
  const TimeSeries raw = load_data(cfg.at("data"), seeds);
  const NormParams norm = resolve_norm(cfg, raw);
  const TimeSeries series = apply_normalizer(raw, norm);

  Model model = load_weights(cfg.at("weights").get<std::string>());
  const std::string pipeline = cfg.at("pipeline").get<std::string>();
  const WindowSpec window =
      cfg.contains("window") ? cfg.at("window").get<WindowSpec>() : WindowSpec{};

  DetectionResult result;
  if (pipeline == "forecast") {
    const ThresholdParams params =
        cfg.contains("threshold") ? cfg.at("threshold").get<ThresholdParams>() : ThresholdParams{};
    result = detect_forecast(series, model, window.length, params);
  } else if (pipeline == "classify" || pipeline == "image") {
    const double prob = get_or<double>(cfg, "prob_threshold", 0.5);
    if (pipeline == "classify") {
      result = detect_classify(series, model, window, prob);
    } else {
      const GafConfig gaf = cfg.contains("gaf") ? cfg.at("gaf").get<GafConfig>() : GafConfig{};
      result = detect_image(series, model, window, gaf, prob);
    }
  } else {
    throw ConfigError("detect.pipeline: unknown pipeline '" + pipeline + "'");
  }
  write_json(cfg.at("out").get<std::string>(), json(result));
  std::cout << result.events.size() << " events detected\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const json& cfg, const SeedTree&) {
  check_keys(cfg, "evaluate", {"pred", "truth", "out"}, {"seed", "metric"});
  const TimeSeries truth = load_csv(cfg.at("truth").get<std::string>());
  const json pred_json = load_json_file(cfg.at("pred").get<std::string>(), "pred");
  if (!pred_json.contains("events")) throw Error("pred: missing 'events'");

  std::vector<std::uint8_t> pred_flags(truth.n_points(), 0);
  for (const auto& e : pred_json.at("events")) {
    const double start = e.at("start").get<double>();
    const double end = e.at("end").get<double>();
    for (std::size_t i = 0; i < truth.n_points(); ++i) {
      if (truth.timestamps[i] >= start && truth.timestamps[i] <= end) pred_flags[i] = 1;
    }
  }
  const MetricConfig metric =
      cfg.contains("metric") ? cfg.at("metric").get<MetricConfig>() : MetricConfig{};
  const EventReport report = evaluate(pred_flags, truth.labels, truth.timestamps, metric);
  write_json(cfg.at("out").get<std::string>(), json(report));
  std::cout << "tp=" << report.tp << " fp=" << report.fp << " fn=" << report.fn
            << " f_beta=" << round6(report.f_beta) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gaf

int cmd_gaf(const json& cfg, const SeedTree& seeds) {
  check_keys(cfg, "gaf", {"data", "out_dir"},
             {"seed", "norm", "window", "window_index", "gaf", "stack"});
  const TimeSeries raw = load_data(cfg.at("data"), seeds);
  const NormParams norm = resolve_norm(cfg, raw);
  const TimeSeries series = apply_normalizer(raw, norm);

  const WindowSpec window =
      cfg.contains("window") ? cfg.at("window").get<WindowSpec>() : WindowSpec{};
  const GafConfig gaf_cfg = cfg.contains("gaf") ? cfg.at("gaf").get<GafConfig>() : GafConfig{};
  const std::size_t index = get_or<std::size_t>(cfg, "window_index", 0);

  const WindowBatch batch = make_windows(series, window);
  if (index >= batch.n_windows())
    throw ConfigError("gaf.window_index: only " + std::to_string(batch.n_windows()) +
                      " windows available");

  const std::size_t elems = window.length * series.n_channels();
  std::vector<double> win(batch.data.begin() + index * elems,
                          batch.data.begin() + (index + 1) * elems);
  GafStack stack = gaf_stack(win, window.length, series.n_channels(), gaf_cfg, index);
  stack.channel_names = series.channel_names;

  const std::filesystem::path out_dir(cfg.at("out_dir").get<std::string>());
  std::filesystem::create_directories(out_dir);
  const std::size_t s = gaf_cfg.resolution;
  for (std::size_t c = 0; c < series.n_channels(); ++c) {
    Tensor img({s, s});
    std::copy(stack.images.data.begin() + c * s * s, stack.images.data.begin() + (c + 1) * s * s,
              img.data.begin());
    const auto path = out_dir / ("window" + std::to_string(index) + "_" +
                                 series.channel_names[c] + ".pgm");
    export_pgm(img, path.string());
  }
  if (get_or<bool>(cfg, "stack", false)) {
    save_stack(stack, (out_dir / ("window" + std::to_string(index) + ".gafstack")).string());
  }
  std::cout << "wrote " << series.n_channels() << " images to " << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// profile

int cmd_profile(const json& cfg, const SeedTree&) {
  check_keys(cfg, "profile", {}, {"seed", "model", "weights", "platforms", "out"});
  if (cfg.contains("model") == cfg.contains("weights"))
    throw ConfigError("profile: exactly one of 'model' or 'weights' required");
  ModelSpec spec;
  if (cfg.contains("model")) {
    spec = cfg.at("model").get<ModelSpec>();
  } else {
    spec = load_weights(cfg.at("weights").get<std::string>()).spec();
  }
  const CostReport report = profile(spec);
  const auto platforms = resolve_platforms(cfg);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"metric", "value"});
  rows.push_back({"MACs", thousands(report.total_macs)});
  rows.push_back({"Parameters", thousands(report.total_params)});
  rows.push_back({"RAM (KB)", thousands(report.ram_kb)});
  rows.push_back({"ROM (KB)", thousands(report.rom_kb)});
  for (const auto& platform : platforms) {
    const BudgetReport budget = budget_report(static_cast<double>(report.ram_kb),
                                              static_cast<double>(report.rom_kb), platform);
    rows.push_back({"RAM (%) " + platform.name + " (" + platform_size_label(platform.ram_bytes) +
                        ")",
                    budget.ram_pct});
    rows.push_back({"ROM (%) " + platform.name + " (" + platform_size_label(platform.rom_bytes) +
                        ")",
                    budget.rom_pct});
  }
  std::cout << render_table(rows);

  if (cfg.contains("out")) {
    json out = report;
    json budgets = json::array();
    for (const auto& platform : platforms) {
      const BudgetReport budget = budget_report(static_cast<double>(report.ram_kb),
                                                static_cast<double>(report.rom_kb), platform);
      budgets.push_back({{"platform", platform.name},
                         {"ram_pct", budget.ram_pct},
                         {"rom_pct", budget.rom_pct}});
    }
    out["budgets"] = budgets;
    write_json(cfg.at("out").get<std::string>(), out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// search

int cmd_search(const json& cfg, const SeedTree& seeds, std::optional<std::size_t> workers_flag) {
  check_keys(cfg, "search", {"data", "space", "n_trials", "baseline_params", "out_trials"},
             {"seed", "split", "window", "gaf", "norm", "train", "workers", "out_front"});
  const SearchSpace space = cfg.at("space").get<SearchSpace>();

  json data_cfg = cfg;
  data_cfg.erase("space");
  data_cfg["task"] = to_string(space.family);
  const TaskData data = assemble_task_data(data_cfg, seeds);

  TrialContext ctx;
  ctx.train_set = data.train_set;
  ctx.val_set = data.val_set;
  ctx.loss = data.loss;
  const WindowSpec window =
      cfg.contains("window") ? cfg.at("window").get<WindowSpec>() : WindowSpec{};
  const GafConfig gaf_cfg = cfg.contains("gaf") ? cfg.at("gaf").get<GafConfig>() : GafConfig{};
  const std::size_t n_channels = space.family == TaskKind::image
                                     ? ctx.train_set.inputs.shape[1]
                                     : ctx.train_set.inputs.shape.back();
  ctx.dims = {window.length, n_channels, gaf_cfg.resolution};

  const auto n_trials = cfg.at("n_trials").get<std::size_t>();
  const auto baseline = cfg.at("baseline_params").get<std::uint64_t>();
  TrainConfig tc = cfg.contains("train") ? cfg.at("train").get<TrainConfig>() : TrainConfig{};
  std::size_t workers = get_or<std::size_t>(cfg, "workers", 1);
  if (workers_flag) workers = *workers_flag;
  if (workers < 1) throw ConfigError("search.workers: must be >= 1");

  const auto trials =
      run_search(space, ctx, n_trials, tc, baseline, seeds.has_master ? seeds.master : 0, workers);
  save_trials(trials, cfg.at("out_trials").get<std::string>());

  std::size_t completed = 0;
  for (const auto& t : trials) completed += t.status == TrialStatus::completed;
  if (cfg.contains("out_front")) {
    ParetoFront front;
    if (completed > 0) front = extract_front(trials);
    export_front(trials, front, cfg.at("out_front").get<std::string>());
    if (completed > 0) {
      for (const auto& t : trials) {
        if (t.id == front.knee) {
          std::cout << "knee: trial " << t.id << " val_loss " << t.val_loss << " macs " << t.macs
                    << " params " << t.params << "\n";
        }
      }
    }
  }
  std::cout << completed << "/" << trials.size() << " trials completed\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct SystemColumn {
  std::string label;
  std::optional<double> precision, recall, f05;  // fractions in [0, 1]
  std::optional<std::uint64_t> params, macs, ram_kb, rom_kb;
};

SystemColumn parse_system(const json& j) {
  check_keys(j, "system", {"label"},
             {"cost", "eval", "precision", "recall", "f05", "params", "macs", "ram_kb", "rom_kb"});
  SystemColumn sys;
  sys.label = j.at("label").get<std::string>();
  if (j.contains("cost")) {
    const json cost = load_json_file(j.at("cost").get<std::string>(), "system.cost");
    sys.params = cost.at("total_params").get<std::uint64_t>();
    sys.macs = cost.at("total_macs").get<std::uint64_t>();
    sys.ram_kb = cost.at("ram_kb").get<std::uint64_t>();
    sys.rom_kb = cost.at("rom_kb").get<std::uint64_t>();
  }
  if (j.contains("eval")) {
    const json ev = load_json_file(j.at("eval").get<std::string>(), "system.eval");
    sys.precision = ev.at("precision").get<double>();
    sys.recall = ev.at("recall").get<double>();
    sys.f05 = ev.at("f_beta").get<double>();
  }
  if (j.contains("precision")) sys.precision = j.at("precision").get<double>();
  if (j.contains("recall")) sys.recall = j.at("recall").get<double>();
  if (j.contains("f05")) sys.f05 = j.at("f05").get<double>();
  if (j.contains("params")) sys.params = j.at("params").get<std::uint64_t>();
  if (j.contains("macs")) sys.macs = j.at("macs").get<std::uint64_t>();
  if (j.contains("ram_kb")) sys.ram_kb = j.at("ram_kb").get<std::uint64_t>();
  if (j.contains("rom_kb")) sys.rom_kb = j.at("rom_kb").get<std::uint64_t>();
  return sys;
}

std::string pct1(double fraction) {
  const long long tenths = static_cast<long long>(std::floor(fraction * 1000.0 + 0.5));
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

int cmd_report(const json& cfg, const SeedTree&) {
  check_keys(cfg, "report", {"systems"}, {"seed", "platforms", "out"});
  std::vector<SystemColumn> systems;
  for (const auto& s : cfg.at("systems")) systems.push_back(parse_system(s));
  if (systems.empty()) throw ConfigError("report.systems: must be non-empty");
  const auto platforms = resolve_platforms(cfg);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Metric"};
  for (const auto& s : systems) header.push_back(s.label);
  rows.push_back(header);

  auto add_row = [&](const std::string& name, auto getter) {
    bool any = false;
    std::vector<std::string> row{name};
    for (const auto& s : systems) {
      const auto cell = getter(s);
      row.push_back(cell.value_or("-"));
      any |= cell.has_value();
    }
    if (any) rows.push_back(std::move(row));
  };

  auto opt_pct = [](const std::optional<double>& v) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return pct1(*v);
  };
  add_row("Event-wise Precision (%)",
          [&](const SystemColumn& s) { return opt_pct(s.precision); });
  add_row("Event-wise Recall (%)", [&](const SystemColumn& s) { return opt_pct(s.recall); });
  add_row("Event-wise F0.5 (%)", [&](const SystemColumn& s) { return opt_pct(s.f05); });

  auto opt_count = [](const std::optional<std::uint64_t>& v) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return thousands(*v);
  };
  add_row("Parameters", [&](const SystemColumn& s) { return opt_count(s.params); });
  add_row("MACs", [&](const SystemColumn& s) { return opt_count(s.macs); });
  add_row("RAM (KB)", [&](const SystemColumn& s) { return opt_count(s.ram_kb); });
  add_row("ROM (KB)", [&](const SystemColumn& s) { return opt_count(s.rom_kb); });

  for (const auto& platform : platforms) {
    add_row("RAM (%) " + platform.name + " (" + platform_size_label(platform.ram_bytes) + ")",
            [&](const SystemColumn& s) -> std::optional<std::string> {
              if (!s.ram_kb) return std::nullopt;
              return budget_pct(static_cast<double>(*s.ram_kb), platform.ram_bytes);
            });
    add_row("ROM (%) " + platform.name + " (" + platform_size_label(platform.rom_bytes) + ")",
            [&](const SystemColumn& s) -> std::optional<std::string> {
              if (!s.rom_kb) return std::nullopt;
              return budget_pct(static_cast<double>(*s.rom_kb), platform.rom_bytes);
            });
  }

  const std::string table = render_table(rows);
  std::cout << table;
  if (cfg.contains("out")) write_text(cfg.at("out").get<std::string>(), table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tadkit: spacecraft-telemetry anomaly detection toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  long long seed_flag = 0;
  long long workers_flag = -1;

  const char* commands[] = {"synth", "train",   "detect", "evaluate",
                            "gaf",   "profile", "search", "report"};
  const char* descriptions[] = {
      "generate a synthetic telemetry CSV fixture",
      "train a model; writes weights, loss trace and scaling params",
      "run a detection pipeline; writes a detection report JSON",
      "score a detection report against labeled data (event-wise F0.5)",
      "export GAF images (PGM) for one window",
      "estimate MACs/params/RAM/ROM and platform budget shares",
      "multi-objective architecture search; writes trials and front CSV",
      "render a combined metrics/resources table from JSON inputs"};
  std::vector<CLI::Option*> seed_options;
  for (std::size_t i = 0; i < 8; ++i) {
    auto* sub = app.add_subcommand(commands[i], descriptions[i]);
    sub->add_option("--config", config_path, "JSON config file")->required();
    seed_options.push_back(
        sub->add_option("--seed", seed_flag, "master seed overriding the config"));
    if (std::string(commands[i]) == "search")
      sub->add_option("--workers", workers_flag, "parallel trial workers");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  }

  bool seed_given = false;
  for (const auto* opt : seed_options) seed_given |= opt->count() > 0;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const json cfg = load_config(config_path);
    const SeedTree seeds = seed_tree(
        cfg, seed_given ? std::optional<std::uint64_t>(static_cast<std::uint64_t>(seed_flag))
                        : std::nullopt);
    if (command == "synth") return cmd_synth(cfg, seeds);
    if (command == "train") return cmd_train(cfg, seeds);
    if (command == "detect") return cmd_detect(cfg, seeds);
    if (command == "evaluate") return cmd_evaluate(cfg, seeds);
    if (command == "gaf") return cmd_gaf(cfg, seeds);
    if (command == "profile") return cmd_profile(cfg, seeds);
    if (command == "search")
      return cmd_search(cfg, seeds,
                        workers_flag >= 0 ? std::optional<std::size_t>(workers_flag)
                                          : std::nullopt);
    if (command == "report") return cmd_report(cfg, seeds);
    std::cerr << "unknown command '" << command << "'\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
