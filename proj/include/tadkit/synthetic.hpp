#pragma once

// Seeded synthetic telemetry with injected, labeled anomalies. Stands in for
// mission data at desk scale: per-channel sinusoids plus a linear trend and
// white Gaussian noise, sampled at 1 Hz (timestamp = point index in seconds).
//
// Anomaly kinds:
//   spike            - adds magnitude * noise_stddev over the interval
//                      (noise_stddev of 0 falls back to a unit scale)
//   level_shift      - adds magnitude (raw units) over the interval
//   frequency_change - halves the channel's base period over the interval;
//                      magnitude is ignored
//
// The noise stream is drawn before anomalies are applied, so regenerating
// with the anomaly list removed yields the exact same baseline.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/rng.hpp"
#include "tadkit/timeseries.hpp"

namespace tadkit {

enum class AnomalyKind { spike, level_shift, frequency_change };

inline std::string to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::level_shift: return "level_shift";
    case AnomalyKind::frequency_change: return "frequency_change";
  }
  return "?";
}

inline AnomalyKind anomaly_kind_from_string(const std::string& s) {
  if (s == "spike") return AnomalyKind::spike;
  if (s == "level_shift") return AnomalyKind::level_shift;
  if (s == "frequency_change") return AnomalyKind::frequency_change;
  throw ConfigError("anomaly.kind: unknown kind '" + s + "'");
}

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::spike;
  std::size_t start = 0;     // point index
  std::size_t duration = 1;  // points, interval is [start, start + duration)
  double magnitude = 1.0;
};

struct ChannelSignal {
  double amplitude = 1.0;
  double period = 100.0;  // seconds
};

struct SyntheticSpec {
  std::size_t n_points = 1000;
  std::size_t n_channels = 1;
  std::vector<ChannelSignal> base_signal;  // one entry per channel
  double trend_slope = 0.0;
  double noise_stddev = 0.0;
  std::vector<AnomalySpec> anomalies;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_points == 0) throw ConfigError("synthetic.n_points: must be positive");
    if (n_channels == 0) throw ConfigError("synthetic.n_channels: must be positive");
    if (base_signal.size() != n_channels)
      throw ConfigError("synthetic.base_signal: need one entry per channel");
    for (const auto& ch : base_signal) {
      if (ch.period <= 0) throw ConfigError("synthetic.base_signal.period: must be positive");
    }
    if (noise_stddev < 0) throw ConfigError("synthetic.noise_stddev: must be >= 0");
    for (const auto& a : anomalies) {
      if (a.duration < 1) throw ConfigError("synthetic.anomalies.duration: must be >= 1");
      if (a.start + a.duration > n_points)
        throw ConfigError("synthetic.anomalies: interval exceeds series length");
    }
  }
};

inline void to_json(json& j, const ChannelSignal& c) {
  j = json{{"amplitude", c.amplitude}, {"period", c.period}};
}
inline void from_json(const json& j, ChannelSignal& c) {
  check_keys(j, "base_signal", {"amplitude", "period"});
  j.at("amplitude").get_to(c.amplitude);
  j.at("period").get_to(c.period);
}

inline void to_json(json& j, const AnomalySpec& a) {
  j = json{{"kind", to_string(a.kind)},
           {"start", a.start},
           {"duration", a.duration},
           {"magnitude", a.magnitude}};
}
inline void from_json(const json& j, AnomalySpec& a) {
  check_keys(j, "anomaly", {"kind", "start", "duration"}, {"magnitude"});
  a.kind = anomaly_kind_from_string(j.at("kind").get<std::string>());
  j.at("start").get_to(a.start);
  j.at("duration").get_to(a.duration);
  a.magnitude = get_or<double>(j, "magnitude", 1.0);
}

inline void to_json(json& j, const SyntheticSpec& s) {
  j = json{{"n_points", s.n_points},     {"n_channels", s.n_channels},
           {"base_signal", s.base_signal}, {"trend_slope", s.trend_slope},
           {"noise_stddev", s.noise_stddev}, {"anomalies", s.anomalies},
           {"seed", s.seed}};
}
inline void from_json(const json& j, SyntheticSpec& s) {
  check_keys(j, "synthetic", {"n_points", "n_channels", "base_signal"},
             {"trend_slope", "noise_stddev", "anomalies", "seed"});
  j.at("n_points").get_to(s.n_points);
  j.at("n_channels").get_to(s.n_channels);
  j.at("base_signal").get_to(s.base_signal);
  s.trend_slope = get_or<double>(j, "trend_slope", 0.0);
  s.noise_stddev = get_or<double>(j, "noise_stddev", 0.0);
  s.anomalies = get_or<std::vector<AnomalySpec>>(j, "anomalies", {});
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  s.validate();
}

inline TimeSeries synthesize(const SyntheticSpec& spec) {
  spec.validate();

  auto sorted = spec.anomalies;
  std::sort(sorted.begin(), sorted.end(),
            [](const AnomalySpec& a, const AnomalySpec& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start < sorted[i - 1].start + sorted[i - 1].duration)
      throw Error("synthesize: overlapping anomaly intervals at point " +
                  std::to_string(sorted[i].start));
  }

  const std::size_t n = spec.n_points;
  const std::size_t nc = spec.n_channels;
  TimeSeries series;
  series.channel_names.reserve(nc);
  for (std::size_t c = 0; c < nc; ++c) series.channel_names.push_back("ch" + std::to_string(c));
  series.timestamps.resize(n);
  series.values.resize(n * nc);
  series.labels.assign(n, 0);

  constexpr double two_pi = 6.283185307179586476925286766559;
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    series.timestamps[i] = t;
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& sig = spec.base_signal[c];
      double v = sig.amplitude * std::sin(two_pi * t / sig.period) + spec.trend_slope * t;
      if (spec.noise_stddev > 0) v += spec.noise_stddev * rng.gaussian();
      series.at(i, c) = v;
    }
  }

  const double noise_scale = spec.noise_stddev > 0 ? spec.noise_stddev : 1.0;
  for (const auto& a : sorted) {
    for (std::size_t i = a.start; i < a.start + a.duration; ++i) {
      series.labels[i] = 1;
      const double t = static_cast<double>(i);
      for (std::size_t c = 0; c < nc; ++c) {
        const auto& sig = spec.base_signal[c];
        switch (a.kind) {
          case AnomalyKind::spike:
            series.at(i, c) += a.magnitude * noise_scale;
            break;
          case AnomalyKind::level_shift:
            series.at(i, c) += a.magnitude;
            break;
          case AnomalyKind::frequency_change:
            // Swap the base sinusoid for one at half the period.
            series.at(i, c) += sig.amplitude * (std::sin(two_pi * t / (sig.period / 2.0)) -
                                                std::sin(two_pi * t / sig.period));
            break;
        }
      }
    }
  }
  series.validate();
  return series;
}

}  // namespace tadkit
