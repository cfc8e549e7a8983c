#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tadkit/synthetic.hpp"

using namespace tadkit;

namespace {

SyntheticSpec base_spec() {
  SyntheticSpec spec;
  spec.n_points = 500;
  spec.n_channels = 2;
  spec.base_signal = {{1.0, 50.0}, {0.5, 120.0}};
  spec.trend_slope = 1e-4;
  spec.noise_stddev = 0.1;
  spec.seed = 11;
  return spec;
}

}  // namespace

TEST_CASE("no anomalies means all labels zero") {
  const auto s = synthesize(base_spec());
  for (auto l : s.labels) CHECK(l == 0);
}

TEST_CASE("same seed reproduces the series exactly") {
  auto spec = base_spec();
  spec.anomalies = {{AnomalyKind::spike, 100, 10, 8.0}};
  const auto a = synthesize(spec);
  const auto b = synthesize(spec);
  CHECK(a.timestamps == b.timestamps);
  CHECK(a.values == b.values);
  CHECK(a.labels == b.labels);
}

TEST_CASE("spike rises above the anomaly-free baseline") {
  auto spec = base_spec();
  spec.anomalies = {{AnomalyKind::spike, 100, 10, 8.0}};
  const auto with = synthesize(spec);

  auto clean_spec = spec;
  clean_spec.anomalies.clear();
  const auto clean = synthesize(clean_spec);

  double max_diff = 0.0;
  for (std::size_t i = 100; i < 110; ++i) {
    for (std::size_t c = 0; c < 2; ++c)
      max_diff = std::max(max_diff, std::abs(with.at(i, c) - clean.at(i, c)));
  }
  CHECK(max_diff > 5 * spec.noise_stddev);
  // Outside the interval the two series coincide (same noise stream).
  for (std::size_t i = 0; i < 100; ++i) CHECK(with.at(i, 0) == clean.at(i, 0));
}

TEST_CASE("labels are exactly the injected intervals") {
  auto spec = base_spec();
  spec.anomalies = {{AnomalyKind::level_shift, 50, 20, 1.0},
                    {AnomalyKind::frequency_change, 200, 30, 0.0}};
  const auto s = synthesize(spec);
  for (std::size_t i = 0; i < s.n_points(); ++i) {
    const bool inside = (i >= 50 && i < 70) || (i >= 200 && i < 230);
    CHECK(s.labels[i] == (inside ? 1 : 0));
  }
}

TEST_CASE("level shift offsets by magnitude") {
  auto spec = base_spec();
  spec.noise_stddev = 0.0;
  spec.anomalies = {{AnomalyKind::level_shift, 50, 20, 2.5}};
  const auto with = synthesize(spec);
  auto clean_spec = spec;
  clean_spec.anomalies.clear();
  const auto clean = synthesize(clean_spec);
  for (std::size_t i = 50; i < 70; ++i)
    CHECK(with.at(i, 0) - clean.at(i, 0) == Catch::Approx(2.5));
}

TEST_CASE("overlapping anomaly intervals are rejected") {
  auto spec = base_spec();
  spec.anomalies = {{AnomalyKind::spike, 100, 20, 8.0}, {AnomalyKind::level_shift, 110, 5, 1.0}};
  CHECK_THROWS_AS(synthesize(spec), Error);
}

TEST_CASE("spec validation catches bad intervals") {
  auto spec = base_spec();
  spec.anomalies = {{AnomalyKind::spike, 495, 10, 1.0}};
  CHECK_THROWS_AS(synthesize(spec), ConfigError);
}

TEST_CASE("synthetic spec json round-trip") {
  auto spec = base_spec();
  spec.anomalies = {{AnomalyKind::spike, 10, 5, 3.0}};
  const json j = spec;
  const auto back = j.get<SyntheticSpec>();
  CHECK(back.n_points == spec.n_points);
  CHECK(back.base_signal.size() == 2);
  CHECK(back.base_signal[1].period == 120.0);
  CHECK(back.anomalies.size() == 1);
  CHECK(back.seed == 11);

  json bad = j;
  bad["typo_field"] = 1;
  CHECK_THROWS_AS(bad.get<SyntheticSpec>(), ConfigError);
}
