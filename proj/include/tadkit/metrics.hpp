#pragma once

// Event-wise evaluation. Point flags are reduced to events (maximal runs of
// anomalous points), nearby events are merged, and precision/recall/F-beta
// are counted per event rather than per point. The default beta of 0.5
// weights precision twice as heavily as recall, and the matching tolerance
// extends each ground-truth event backwards in time so early detections
// still count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/timeseries.hpp"

namespace tadkit {

struct MetricConfig {
  double merge_tolerance = 60.0;  // seconds
  double early_tolerance = 60.0;  // seconds
  double beta = 0.5;

  void validate() const {
    if (merge_tolerance < 0) throw ConfigError("metric.merge_tolerance: must be >= 0");
    if (early_tolerance < 0) throw ConfigError("metric.early_tolerance: must be >= 0");
    if (!(beta > 0)) throw ConfigError("metric.beta: must be positive");
  }
};

inline void to_json(json& j, const MetricConfig& c) {
  j = json{{"merge_tolerance", c.merge_tolerance},
           {"early_tolerance", c.early_tolerance},
           {"beta", c.beta}};
}
inline void from_json(const json& j, MetricConfig& c) {
  check_keys(j, "metric", {}, {"merge_tolerance", "early_tolerance", "beta"});
  c.merge_tolerance = get_or<double>(j, "merge_tolerance", 60.0);
  c.early_tolerance = get_or<double>(j, "early_tolerance", 60.0);
  c.beta = get_or<double>(j, "beta", 0.5);
  c.validate();
}

struct EventReport {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f_beta = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (pred idx, gt idx)
};

// Maximal runs of flag=1, as inclusive [first, last] timestamp intervals.
inline std::vector<AnomalyEvent> extract_events(const std::vector<std::uint8_t>& flags,
                                                const std::vector<double>& timestamps) {
  if (flags.size() != timestamps.size())
    throw Error("extract_events: flags/timestamps length mismatch");
  std::vector<AnomalyEvent> events;
  std::size_t i = 0;
  while (i < flags.size()) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < flags.size() && flags[j + 1]) ++j;
    events.push_back({timestamps[i], timestamps[j]});
    i = j + 1;
  }
  return events;
}

// Transitively coalesces events whose gap to the predecessor is strictly
// below the tolerance. Input must be sorted by start and non-overlapping.
inline std::vector<AnomalyEvent> merge_events(const std::vector<AnomalyEvent>& events,
                                              double merge_tolerance) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].end_time < events[i].start_time)
      throw Error("merge_events: event " + std::to_string(i) + " has end < start");
    if (i > 0 && events[i].start_time <= events[i - 1].end_time)
      throw Error("merge_events: events unsorted or overlapping at index " + std::to_string(i));
  }
  std::vector<AnomalyEvent> merged;
  for (const auto& e : events) {
    if (!merged.empty() && e.start_time - merged.back().end_time < merge_tolerance) {
      merged.back().end_time = e.end_time;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

namespace metric_detail {

inline bool overlaps(double a_start, double a_end, double b_start, double b_end) {
  return a_start <= b_end && b_start <= a_end;
}

}  // namespace metric_detail

// Event-level confusion counts. A ground-truth event is detected iff some
// predicted event overlaps it after extending its start backwards by
// early_tolerance; a predicted event overlapping no extended ground-truth
// interval is one false positive regardless of its length.
inline EventReport match_events(const std::vector<AnomalyEvent>& pred,
                                const std::vector<AnomalyEvent>& gt, double early_tolerance) {
  EventReport report;
  std::vector<bool> pred_matched(pred.size(), false);
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const double g_start = gt[g].start_time - early_tolerance;
    bool detected = false;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (metric_detail::overlaps(pred[p].start_time, pred[p].end_time, g_start, gt[g].end_time)) {
        detected = true;
        pred_matched[p] = true;
        report.matched.emplace_back(p, g);
      }
    }
    if (detected) {
      ++report.tp;
    } else {
      ++report.fn;
    }
  }
  for (bool m : pred_matched) {
    if (!m) ++report.fp;
  }
  return report;
}

// F-beta from precision and recall; 0 when both are 0.
inline double f_beta(double precision, double recall, double beta = 0.5) {
  if (precision + recall == 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

namespace metric_detail {

// Zero-division conventions: with no predictions, precision is 1 only when
// there is also no ground truth (nothing claimed, nothing missed); with no
// ground truth, recall is vacuously 1.
inline void fill_scores(EventReport& r, bool gt_empty, double beta) {
  r.precision = (r.tp + r.fp) > 0
                    ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp)
                    : (gt_empty ? 1.0 : 0.0);
  r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 1.0;
  r.f_beta = f_beta(r.precision, r.recall, beta);
}

}  // namespace metric_detail

// Full pipeline: extract events on both sides, merge both, match, score.
inline EventReport evaluate(const std::vector<std::uint8_t>& pred_flags,
                            const std::vector<std::uint8_t>& gt_labels,
                            const std::vector<double>& timestamps, const MetricConfig& config) {
  config.validate();
  if (pred_flags.size() != gt_labels.size() || pred_flags.size() != timestamps.size())
    throw Error("evaluate: flags/labels/timestamps length mismatch");
  const auto pred = merge_events(extract_events(pred_flags, timestamps), config.merge_tolerance);
  const auto gt = merge_events(extract_events(gt_labels, timestamps), config.merge_tolerance);
  EventReport report = match_events(pred, gt, config.early_tolerance);
  metric_detail::fill_scores(report, gt.empty(), config.beta);
  return report;
}

// Merged-events entry point for callers that already hold event lists.
inline EventReport evaluate_events(const std::vector<AnomalyEvent>& pred_events,
                                   const std::vector<AnomalyEvent>& gt_events,
                                   const MetricConfig& config) {
  config.validate();
  const auto pred = merge_events(pred_events, config.merge_tolerance);
  const auto gt = merge_events(gt_events, config.merge_tolerance);
  EventReport report = match_events(pred, gt, config.early_tolerance);
  metric_detail::fill_scores(report, gt.empty(), config.beta);
  return report;
}

inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline void to_json(json& j, const EventReport& r) {
  json matched = json::array();
  for (const auto& [p, g] : r.matched) matched.push_back({p, g});
  j = json{{"tp", r.tp},
           {"fp", r.fp},
           {"fn", r.fn},
           {"precision", round6(r.precision)},
           {"recall", round6(r.recall)},
           {"f_beta", round6(r.f_beta)},
           {"matched", matched}};
}

}  // namespace tadkit
