#pragma once

// Task-specific dataset assembly on top of the raw telemetry model. Each
// detector family consumes windows differently:
//   forecast  - stride-1 windows paired with the next point (all channels)
//   classify  - spec windows labeled by the any-point rule, class-balanced
//   image     - classify windows encoded as GAF stacks

#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/gaf.hpp"
#include "tadkit/timeseries.hpp"
#include "tadkit/train.hpp"

namespace tadkit {

enum class TaskKind { forecast, classify, image };

inline std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::forecast: return "forecast";
    case TaskKind::classify: return "classify";
    case TaskKind::image: return "image";
  }
  return "?";
}

inline TaskKind task_from_string(const std::string& s) {
  if (s == "forecast") return TaskKind::forecast;
  if (s == "classify") return TaskKind::classify;
  if (s == "image") return TaskKind::image;
  throw ConfigError("task: unknown task '" + s + "'");
}

// One-step-ahead pairs: window [i, i+W) predicts point i+W over all
// channels. With nominal_only set, pairs touching any labeled point (window
// or target) are dropped so the forecaster learns nominal dynamics only.
inline Dataset build_forecast_dataset(const TimeSeries& series, std::size_t window_len,
                                      bool nominal_only = true) {
  const std::size_t n = series.n_points();
  const std::size_t nc = series.n_channels();
  if (window_len < 2) throw ConfigError("forecast window length must be >= 2");
  if (n <= window_len) throw Error("build_forecast_dataset: series not longer than one window");

  std::vector<std::size_t> starts;
  for (std::size_t start = 0; start + window_len < n; ++start) {
    if (nominal_only) {
      bool touched = false;
      for (std::size_t t = start; t <= start + window_len && !touched; ++t)
        touched = series.labels[t] != 0;
      if (touched) continue;
    }
    starts.push_back(start);
  }
  if (starts.empty()) throw Error("build_forecast_dataset: no usable windows");

  Dataset ds;
  ds.inputs = Tensor({starts.size(), window_len, nc});
  ds.targets = Tensor({starts.size(), nc});
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t start = starts[i];
    std::copy(series.values.begin() + start * nc,
              series.values.begin() + (start + window_len) * nc,
              ds.inputs.data.begin() + i * window_len * nc);
    for (std::size_t c = 0; c < nc; ++c)
      ds.targets.data[i * nc + c] = series.at(start + window_len, c);
  }
  return ds;
}

inline Dataset build_classify_dataset(const TimeSeries& series, const WindowSpec& wspec) {
  const WindowBatch batch = make_windows(series, wspec);
  Dataset ds;
  ds.inputs = Tensor({batch.n_windows(), wspec.length, series.n_channels()});
  ds.inputs.data = batch.data;
  ds.targets = Tensor({batch.n_windows(), 1});
  for (std::size_t i = 0; i < batch.n_windows(); ++i)
    ds.targets.data[i] = static_cast<double>(batch.labels[i]);
  ds.weights = compute_sample_weights(batch.labels);
  return ds;
}

inline Dataset build_image_dataset(const TimeSeries& series, const WindowSpec& wspec,
                                   const GafConfig& gaf) {
  gaf.validate();
  const WindowBatch batch = make_windows(series, wspec);
  const std::size_t nc = series.n_channels();
  const std::size_t s = gaf.resolution;
  Dataset ds;
  ds.inputs = Tensor({batch.n_windows(), nc, s, s});
  ds.targets = Tensor({batch.n_windows(), 1});
  std::vector<double> window(wspec.length * nc);
  for (std::size_t i = 0; i < batch.n_windows(); ++i) {
    std::copy(batch.data.begin() + i * window.size(), batch.data.begin() + (i + 1) * window.size(),
              window.begin());
    const GafStack stack = gaf_stack(window, wspec.length, nc, gaf, i);
    std::copy(stack.images.data.begin(), stack.images.data.end(),
              ds.inputs.data.begin() + i * nc * s * s);
    ds.targets.data[i] = static_cast<double>(batch.labels[i]);
  }
  ds.weights = compute_sample_weights(batch.labels);
  return ds;
}

}  // namespace tadkit
