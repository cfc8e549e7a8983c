#pragma once

// Telemetry data model: timestamped multichannel values with per-point
// binary anomaly labels, plus the dataset mechanics shared by all three
// detection pipelines (scaling, windowing, class weights, contiguous splits).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"

namespace tadkit {

struct TimeSeries {
  std::vector<std::string> channel_names;
  std::vector<double> timestamps;     // strictly increasing, seconds
  std::vector<double> values;         // row-major [n_points x n_channels]
  std::vector<std::uint8_t> labels;   // per-point anomaly flag

  std::size_t n_points() const { return timestamps.size(); }
  std::size_t n_channels() const { return channel_names.size(); }

  double at(std::size_t point, std::size_t channel) const {
    return values[point * n_channels() + channel];
  }
  double& at(std::size_t point, std::size_t channel) {
    return values[point * n_channels() + channel];
  }

  // Enforces the type invariants; call after hand-assembling a series.
  void validate() const {
    const std::size_t n = timestamps.size();
    if (labels.size() != n) throw Error("TimeSeries: labels/timestamps length mismatch");
    if (values.size() != n * n_channels()) throw Error("TimeSeries: values size mismatch");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(timestamps[i] > timestamps[i - 1]))
        throw Error("TimeSeries: timestamps not strictly increasing at index " + std::to_string(i));
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw Error("TimeSeries: non-finite value");
    }
  }
};

// Inclusive time interval of one anomalous episode.
struct AnomalyEvent {
  double start_time = 0.0;
  double end_time = 0.0;
};

struct WindowSpec {
  std::size_t length = 224;
  std::size_t stride = 1;
  // Label rule: a window is anomalous iff any covered point is anomalous.

  void validate() const {
    if (length < 2) throw ConfigError("window.length: must be >= 2");
    if (stride < 1) throw ConfigError("window.stride: must be >= 1");
  }
};

inline void to_json(json& j, const WindowSpec& w) {
  j = json{{"length", w.length}, {"stride", w.stride}};
}
inline void from_json(const json& j, WindowSpec& w) {
  check_keys(j, "window", {}, {"length", "stride"});
  w.length = get_or<std::size_t>(j, "length", 224);
  w.stride = get_or<std::size_t>(j, "stride", 1);
  w.validate();
}

// Per-channel min/max fitted on the training split only.
struct NormParams {
  std::vector<double> min;
  std::vector<double> max;
};

inline void to_json(json& j, const NormParams& p) {
  j = json{{"min", p.min}, {"max", p.max}};
}
inline void from_json(const json& j, NormParams& p) {
  check_keys(j, "norm_params", {"min", "max"});
  j.at("min").get_to(p.min);
  j.at("max").get_to(p.max);
  if (p.min.size() != p.max.size()) throw ConfigError("norm_params: min/max length mismatch");
  for (std::size_t c = 0; c < p.min.size(); ++c) {
    if (p.max[c] < p.min[c]) throw ConfigError("norm_params: max < min for channel " + std::to_string(c));
  }
}

inline NormParams fit_normalizer(const TimeSeries& train) {
  if (train.n_points() == 0) throw Error("fit_normalizer: empty series");
  const std::size_t nc = train.n_channels();
  NormParams p;
  p.min.assign(nc, 0.0);
  p.max.assign(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    double lo = train.at(0, c), hi = train.at(0, c);
    for (std::size_t i = 1; i < train.n_points(); ++i) {
      lo = std::min(lo, train.at(i, c));
      hi = std::max(hi, train.at(i, c));
    }
    p.min[c] = lo;
    p.max[c] = hi;
  }
  return p;
}

// Min-max map onto [-1, 1], clipped outside the fitted range. A constant
// channel (max == min) maps to 0 everywhere.
inline TimeSeries apply_normalizer(const TimeSeries& series, const NormParams& params) {
  if (params.min.size() != series.n_channels())
    throw Error("apply_normalizer: params fitted on a different channel count");
  TimeSeries out = series;
  for (std::size_t c = 0; c < series.n_channels(); ++c) {
    const double lo = params.min[c], hi = params.max[c];
    for (std::size_t i = 0; i < series.n_points(); ++i) {
      double v;
      if (hi == lo) {
        v = 0.0;
      } else {
        v = 2.0 * (series.at(i, c) - lo) / (hi - lo) - 1.0;
        v = std::clamp(v, -1.0, 1.0);
      }
      out.at(i, c) = v;
    }
  }
  return out;
}

// Dense batch of sliding windows: window i covers points
// [i*stride, i*stride + length), label = any covered point label.
struct WindowBatch {
  std::size_t length = 0;
  std::size_t n_channels = 0;
  std::vector<std::size_t> starts;
  std::vector<double> data;          // [n_windows x length x n_channels]
  std::vector<std::uint8_t> labels;  // per window

  std::size_t n_windows() const { return starts.size(); }
};

inline std::size_t window_count(std::size_t n_points, const WindowSpec& spec) {
  if (n_points < spec.length) return 0;
  return (n_points - spec.length) / spec.stride + 1;
}

inline WindowBatch make_windows(const TimeSeries& series, const WindowSpec& spec) {
  spec.validate();
  if (series.n_points() < spec.length)
    throw Error("make_windows: series shorter than one window (" +
                std::to_string(series.n_points()) + " < " + std::to_string(spec.length) + ")");
  const std::size_t nw = window_count(series.n_points(), spec);
  const std::size_t nc = series.n_channels();
  WindowBatch batch;
  batch.length = spec.length;
  batch.n_channels = nc;
  batch.starts.reserve(nw);
  batch.data.resize(nw * spec.length * nc);
  batch.labels.assign(nw, 0);
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t start = w * spec.stride;
    batch.starts.push_back(start);
    std::uint8_t lab = 0;
    for (std::size_t t = 0; t < spec.length; ++t) {
      lab |= series.labels[start + t];
      for (std::size_t c = 0; c < nc; ++c) {
        batch.data[(w * spec.length + t) * nc + c] = series.at(start + t, c);
      }
    }
    batch.labels[w] = lab;
  }
  return batch;
}

// Inverse-frequency class balancing: anomalous and nominal windows each
// carry half of the total weight; mean weight is 1. A single-class input
// falls back to uniform weights.
inline std::vector<double> compute_sample_weights(const std::vector<std::uint8_t>& window_labels) {
  const std::size_t n = window_labels.size();
  if (n == 0) throw Error("compute_sample_weights: no windows");
  std::size_t n_anom = 0;
  for (auto l : window_labels) n_anom += (l != 0);
  const std::size_t n_nom = n - n_anom;
  if (n_anom == 0 || n_nom == 0) return std::vector<double>(n, 1.0);
  const double w_anom = static_cast<double>(n) / 2.0 / static_cast<double>(n_anom);
  const double w_nom = static_cast<double>(n) / 2.0 / static_cast<double>(n_nom);
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = window_labels[i] ? w_anom : w_nom;
  return weights;
}

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

inline void to_json(json& j, const SplitFractions& s) {
  j = json{{"train", s.train}, {"val", s.val}, {"test", s.test}};
}
inline void from_json(const json& j, SplitFractions& s) {
  check_keys(j, "split", {}, {"train", "val", "test"});
  s.train = get_or<double>(j, "train", 0.7);
  s.val = get_or<double>(j, "val", 0.15);
  s.test = get_or<double>(j, "test", 0.15);
}

struct SplitSeries {
  TimeSeries train;
  TimeSeries val;
  TimeSeries test;
};

namespace detail {
inline TimeSeries slice(const TimeSeries& s, std::size_t begin, std::size_t end) {
  TimeSeries out;
  out.channel_names = s.channel_names;
  out.timestamps.assign(s.timestamps.begin() + begin, s.timestamps.begin() + end);
  out.labels.assign(s.labels.begin() + begin, s.labels.begin() + end);
  const std::size_t nc = s.n_channels();
  out.values.assign(s.values.begin() + begin * nc, s.values.begin() + end * nc);
  return out;
}
}  // namespace detail

// Contiguous temporal split. Boundaries are floored; the last split absorbs
// the remainder. Every split must receive at least one point.
inline SplitSeries split(const TimeSeries& series, const SplitFractions& fractions) {
  if (!(fractions.train > 0 && fractions.val > 0 && fractions.test > 0))
    throw ConfigError("split: all fractions must be positive");
  const double sum = fractions.train + fractions.val + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");
  const std::size_t n = series.n_points();
  const auto b1 = static_cast<std::size_t>(std::floor(n * fractions.train));
  const auto b2 = b1 + static_cast<std::size_t>(std::floor(n * fractions.val));
  if (b1 == 0 || b2 == b1 || b2 >= n)
    throw Error("split: a split received no data");
  return SplitSeries{detail::slice(series, 0, b1), detail::slice(series, b1, b2),
                     detail::slice(series, b2, n)};
}

}  // namespace tadkit
