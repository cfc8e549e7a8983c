#pragma once

// The three detection pipelines.
//
// forecast  - one-step-ahead regression on sliding windows; the per-point
//             mean absolute forecast error is smoothed (EWMA) and flagged by
//             a non-parametric dynamic threshold, then weak events are pruned.
// classify  - a binary classifier scores each window; every point of a
//             window at or above the probability threshold is flagged.
// image     - like classify, with windows encoded as GAF stacks first.
//
// All pipelines assume the series is scaled the way the model was trained
// (the image pipeline requires per-channel values in [-1, 1]).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/gaf.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/metrics.hpp"
#include "tadkit/nn.hpp"
#include "tadkit/timeseries.hpp"

namespace tadkit {

struct ThresholdParams {
  double alpha = 0.3;           // EWMA smoothing factor, in (0, 1]
  std::vector<double> z_grid;   // candidate std multipliers, ascending
  double pruning = 0.1;         // minimum relative drop between event maxima
  bool strict = true;           // flag when smoothed error > epsilon (vs >=)

  ThresholdParams() {
    for (int i = 0; i <= 16; ++i) z_grid.push_back(2.0 + 0.5 * i);  // 2.0 .. 10.0
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("threshold.alpha: must be in (0, 1]");
    if (z_grid.empty()) throw ConfigError("threshold.z_grid: must be non-empty");
    for (std::size_t i = 1; i < z_grid.size(); ++i) {
      if (z_grid[i] <= z_grid[i - 1]) throw ConfigError("threshold.z_grid: must be ascending");
    }
    if (pruning < 0.0 || pruning >= 1.0) throw ConfigError("threshold.pruning: must be in [0, 1)");
  }
};

inline void to_json(json& j, const ThresholdParams& p) {
  j = json{{"alpha", p.alpha}, {"z_grid", p.z_grid}, {"pruning", p.pruning}, {"strict", p.strict}};
}
inline void from_json(const json& j, ThresholdParams& p) {
  check_keys(j, "threshold", {}, {"alpha", "z_grid", "pruning", "strict"});
  ThresholdParams defaults;
  p.alpha = get_or<double>(j, "alpha", defaults.alpha);
  p.z_grid = get_or<std::vector<double>>(j, "z_grid", defaults.z_grid);
  p.pruning = get_or<double>(j, "pruning", defaults.pruning);
  p.strict = get_or<bool>(j, "strict", defaults.strict);
  p.validate();
}

struct DetectionResult {
  std::string pipeline;
  std::vector<double> scores;        // aligned with input timestamps
  std::vector<std::uint8_t> flags;   // aligned with input timestamps
  std::vector<AnomalyEvent> events;  // maximal runs of flagged points
  json config;                       // parameter snapshot
  json score_summary;
};

inline void to_json(json& j, const DetectionResult& r) {
  json events = json::array();
  for (const auto& e : r.events) events.push_back({{"start", e.start_time}, {"end", e.end_time}});
  std::size_t n_flagged = 0;
  for (auto f : r.flags) n_flagged += (f != 0);
  j = json{{"pipeline", r.pipeline},
           {"config", r.config},
           {"events", events},
           {"n_flagged", n_flagged},
           {"score_summary", r.score_summary}};
}

// ---------------------------------------------------------------------------
// Forecast-and-threshold machinery

// Mean absolute one-step-ahead forecast error over all channels, for points
// t in [window_len, n). Entry i of the result corresponds to point
// window_len + i. The model must map [window_len, C] to a regression over C.
inline std::vector<double> forecast_errors(Model& model, const TimeSeries& series,
                                           std::size_t window_len) {
  const std::size_t n = series.n_points();
  const std::size_t nc = series.n_channels();
  if (n <= window_len) throw Error("forecast_errors: series not longer than one window");
  const auto& in_shape = model.input_shape();
  if (in_shape.size() != 2 || in_shape[0] != window_len || in_shape[1] != nc)
    throw Error("forecast_errors: model input " + shape_string(in_shape) + " does not match [" +
                std::to_string(window_len) + ", " + std::to_string(nc) + "]");
  const auto out_shape = model.output_shape();
  if (out_shape.size() != 1 || out_shape[0] != nc)
    throw Error("forecast_errors: model must predict one value per channel");

  const std::size_t total = n - window_len;
  std::vector<double> errors(total, 0.0);
  const std::size_t chunk = 256;
  for (std::size_t begin = 0; begin < total; begin += chunk) {
    const std::size_t end = std::min(total, begin + chunk);
    const std::size_t b = end - begin;
    Tensor x({b, window_len, nc});
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t start = begin + i;
      std::copy(series.values.begin() + start * nc,
                series.values.begin() + (start + window_len) * nc,
                x.data.begin() + i * window_len * nc);
    }
    const Tensor& pred = model.forward(x);
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t target = begin + i + window_len;
      double acc = 0.0;
      for (std::size_t c = 0; c < nc; ++c)
        acc += std::abs(pred.data[i * nc + c] - series.at(target, c));
      errors[begin + i] = acc / static_cast<double>(nc);
    }
  }
  return errors;
}

// Exponentially weighted moving average: s_0 = e_0, s_t = a*e_t + (1-a)*s_{t-1}.
inline std::vector<double> smooth_errors(const std::vector<double>& e, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("smooth_errors: alpha must be in (0, 1]");
  std::vector<double> s(e.size());
  for (std::size_t t = 0; t < e.size(); ++t)
    s[t] = t == 0 ? e[0] : alpha * e[t] + (1.0 - alpha) * s[t - 1];
  return s;
}

struct DynamicThresholdResult {
  double epsilon = 0.0;
  double z = 0.0;
  double score = 0.0;  // of the winning candidate; 0 when nothing flagged
  std::vector<std::uint8_t> flags;
};

namespace detect_detail {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(const std::vector<double>& s, const std::vector<std::uint8_t>* exclude) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (exclude && (*exclude)[i]) continue;
    sum += s[i];
    ++count;
  }
  MeanStd ms;
  if (count == 0) return ms;
  ms.mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (exclude && (*exclude)[i]) continue;
    const double d = s[i] - ms.mean;
    var += d * d;
  }
  ms.std = std::sqrt(var / static_cast<double>(count));
  return ms;
}

inline std::size_t count_runs(const std::vector<std::uint8_t>& flags) {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i] && (i == 0 || !flags[i - 1])) ++runs;
  return runs;
}

}  // namespace detect_detail

// Non-parametric threshold selection. For each candidate z the threshold is
// mean + z*std of the smoothed errors; the winning z maximizes
//   (drop in mean / mean + drop in std / std) / (|flagged| + runs^2)
// after removing the flagged points. Candidates flagging nothing score 0;
// if every candidate scores 0 nothing is flagged. Ties resolve to the
// smallest z.
inline DynamicThresholdResult dynamic_threshold(const std::vector<double>& s,
                                                const ThresholdParams& params) {
  params.validate();
  if (s.size() < 2) throw Error("dynamic_threshold: need at least 2 points");
  const auto base = detect_detail::mean_std(s, nullptr);
  DynamicThresholdResult result;
  result.flags.assign(s.size(), 0);
  if (base.std == 0.0) {
    result.epsilon = base.mean;
    return result;
  }

  double best_score = 0.0;
  bool found = false;
  std::vector<std::uint8_t> flags(s.size());
  for (double z : params.z_grid) {
    const double eps = base.mean + z * base.std;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool hit = params.strict ? s[i] > eps : s[i] >= eps;
      flags[i] = hit ? 1 : 0;
      flagged += hit;
    }
    if (flagged == 0 || flagged == s.size()) continue;
    const auto rest = detect_detail::mean_std(s, &flags);
    const double delta_mean = base.mean - rest.mean;
    const double delta_std = base.std - rest.std;
    const std::size_t runs = detect_detail::count_runs(flags);
    const double score = (delta_mean / base.mean + delta_std / base.std) /
                         static_cast<double>(flagged + runs * runs);
    if (score > best_score) {
      best_score = score;
      found = true;
      result.epsilon = eps;
      result.z = z;
      result.score = score;
      result.flags = flags;
    }
  }
  if (!found) {
    result.epsilon = base.mean + params.z_grid.back() * base.std;
    result.z = params.z_grid.back();
  }
  return result;
}

// Half-open index interval of consecutive flagged points.
struct Run {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<Run> flag_runs(const std::vector<std::uint8_t>& flags) {
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < flags.size()) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < flags.size() && flags[j]) ++j;
    runs.push_back({i, j});
    i = j;
  }
  return runs;
}

// Telemanom-style pruning: sort events by their maximum smoothed error,
// append the highest non-flagged value as sentinel, and walk the relative
// drops d_i = (m_i - m_{i+1}) / m_i. Events at or above the last position
// whose drop exceeds p survive; everything below it is discarded. p = 0
// disables pruning.
inline std::vector<Run> prune_anomalies(const std::vector<double>& s, const std::vector<Run>& runs,
                                        double p) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("prune_anomalies: p must be in [0, 1)");
  if (p == 0.0 || runs.empty()) return runs;

  std::vector<std::uint8_t> in_run(s.size(), 0);
  std::vector<double> maxima(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = runs[r].begin; i < runs[r].end; ++i) {
      m = std::max(m, s[i]);
      in_run[i] = 1;
    }
    maxima[r] = m;
  }
  double sentinel = 0.0;
  bool any_outside = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!in_run[i]) {
      sentinel = any_outside ? std::max(sentinel, s[i]) : s[i];
      any_outside = true;
    }
  }

  std::vector<std::size_t> order(runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return maxima[a] > maxima[b]; });

  std::size_t keep_upto = 0;  // count of leading sorted events to keep
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double m = maxima[order[i]];
    const double next = i + 1 < order.size() ? maxima[order[i + 1]] : sentinel;
    const double drop = m > 0.0 ? (m - next) / m : 0.0;
    if (drop > p) keep_upto = i + 1;
  }

  std::vector<Run> kept;
  for (std::size_t i = 0; i < keep_upto; ++i) kept.push_back(runs[order[i]]);
  std::sort(kept.begin(), kept.end(), [](const Run& a, const Run& b) { return a.begin < b.begin; });
  return kept;
}

// ---------------------------------------------------------------------------
// Pipelines

inline DetectionResult detect_forecast(const TimeSeries& series, Model& model,
                                       std::size_t window_len, const ThresholdParams& params) {
  params.validate();
  const auto errors = forecast_errors(model, series, window_len);
  const auto smoothed = smooth_errors(errors, params.alpha);
  const auto thresholded = dynamic_threshold(smoothed, params);
  const auto kept = prune_anomalies(smoothed, flag_runs(thresholded.flags), params.pruning);

  DetectionResult result;
  result.pipeline = "forecast";
  const std::size_t n = series.n_points();
  result.scores.assign(n, 0.0);
  result.flags.assign(n, 0);
  for (std::size_t i = 0; i < smoothed.size(); ++i) result.scores[window_len + i] = smoothed[i];
  for (const auto& run : kept) {
    for (std::size_t i = run.begin; i < run.end; ++i) result.flags[window_len + i] = 1;
  }
  result.events = extract_events(result.flags, series.timestamps);
  result.config = json{{"window_length", window_len}, {"threshold", params}};
  double max_s = 0.0;
  for (double v : smoothed) max_s = std::max(max_s, v);
  result.score_summary = json{{"epsilon", thresholded.epsilon},
                              {"z", thresholded.z},
                              {"max_smoothed_error", max_s}};
  return result;
}

namespace detect_detail {

// Shared flagging semantics of the window-classifier pipelines: a window at
// or above the probability threshold flags every covered point; a point's
// score is the maximum probability over windows covering it.
inline DetectionResult classify_windows(const TimeSeries& series, Model& model,
                                        const WindowSpec& wspec, double prob_threshold,
                                        const GafConfig* gaf, const std::string& pipeline) {
  wspec.validate();
  const WindowBatch batch = make_windows(series, wspec);
  const std::size_t nc = series.n_channels();

  const auto& in_shape = model.input_shape();
  if (gaf == nullptr) {
    if (in_shape.size() != 2 || in_shape[0] != wspec.length || in_shape[1] != nc)
      throw Error(pipeline + ": model input " + shape_string(in_shape) + " does not match [" +
                  std::to_string(wspec.length) + ", " + std::to_string(nc) + "]");
  } else {
    if (in_shape.size() != 3 || in_shape[0] != nc || in_shape[1] != gaf->resolution ||
        in_shape[2] != gaf->resolution)
      throw Error(pipeline + ": model input " + shape_string(in_shape) + " does not match [" +
                  std::to_string(nc) + ", " + std::to_string(gaf->resolution) + ", " +
                  std::to_string(gaf->resolution) + "]");
  }
  const auto out_shape = model.output_shape();
  if (out_shape.size() != 1 || out_shape[0] != 1)
    throw Error(pipeline + ": model must output a single probability");

  const std::size_t nw = batch.n_windows();
  std::vector<double> probs(nw, 0.0);
  const std::size_t chunk = 128;
  const std::size_t win_elems = wspec.length * nc;
  for (std::size_t begin = 0; begin < nw; begin += chunk) {
    const std::size_t end = std::min(nw, begin + chunk);
    const std::size_t b = end - begin;
    Tensor x;
    if (gaf == nullptr) {
      x = Tensor({b, wspec.length, nc});
      std::copy(batch.data.begin() + begin * win_elems, batch.data.begin() + end * win_elems,
                x.data.begin());
    } else {
      const std::size_t s = gaf->resolution;
      x = Tensor({b, nc, s, s});
      std::vector<double> window(win_elems);
      for (std::size_t i = 0; i < b; ++i) {
        std::copy(batch.data.begin() + (begin + i) * win_elems,
                  batch.data.begin() + (begin + i + 1) * win_elems, window.begin());
        const GafStack stack = gaf_stack(window, wspec.length, nc, *gaf, begin + i);
        std::copy(stack.images.data.begin(), stack.images.data.end(),
                  x.data.begin() + i * nc * s * s);
      }
    }
    const Tensor& pred = model.forward(x);
    for (std::size_t i = 0; i < b; ++i) probs[begin + i] = pred.data[i];
  }

  DetectionResult result;
  result.pipeline = pipeline;
  const std::size_t n = series.n_points();
  result.scores.assign(n, 0.0);
  result.flags.assign(n, 0);
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t start = batch.starts[w];
    for (std::size_t t = start; t < start + wspec.length; ++t) {
      result.scores[t] = std::max(result.scores[t], probs[w]);
      if (probs[w] >= prob_threshold) result.flags[t] = 1;
    }
  }
  result.events = extract_events(result.flags, series.timestamps);
  result.config = json{{"window", wspec}, {"prob_threshold", prob_threshold}};
  if (gaf) result.config["gaf"] = *gaf;
  double max_p = 0.0;
  for (double v : probs) max_p = std::max(max_p, v);
  result.score_summary = json{{"max_probability", max_p}, {"n_windows", nw}};
  return result;
}

}  // namespace detect_detail

inline DetectionResult detect_classify(const TimeSeries& series, Model& model,
                                       const WindowSpec& wspec, double prob_threshold = 0.5) {
  return detect_detail::classify_windows(series, model, wspec, prob_threshold, nullptr, "classify");
}

inline DetectionResult detect_image(const TimeSeries& series, Model& model,
                                    const WindowSpec& wspec, const GafConfig& gaf,
                                    double prob_threshold = 0.5) {
  gaf.validate();
  return detect_detail::classify_windows(series, model, wspec, prob_threshold, &gaf, "image");
}

}  // namespace tadkit
