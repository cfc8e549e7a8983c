#include <catch2/catch_amalgamated.hpp>

#include "tadkit/rng.hpp"
#include "tadkit/timeseries.hpp"

using namespace tadkit;

namespace {

TimeSeries series_of(std::vector<double> channel) {
  TimeSeries s;
  s.channel_names = {"ch0"};
  for (std::size_t i = 0; i < channel.size(); ++i) s.timestamps.push_back(double(i));
  s.values = std::move(channel);
  s.labels.assign(s.timestamps.size(), 0);
  return s;
}

}  // namespace

TEST_CASE("normalizer maps min/max to [-1,1]") {
  const auto s = series_of({0, 5, 10});
  const auto p = fit_normalizer(s);
  const auto out = apply_normalizer(s, p);
  CHECK(out.at(0, 0) == -1.0);
  CHECK(out.at(1, 0) == 0.0);
  CHECK(out.at(2, 0) == 1.0);
}

TEST_CASE("constant channel normalizes to zero") {
  const auto s = series_of({7, 7, 7});
  const auto out = apply_normalizer(s, fit_normalizer(s));
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.at(i, 0) == 0.0);
}

TEST_CASE("values outside the fitted range clip") {
  const auto train = series_of({0, 10});
  const auto p = fit_normalizer(train);
  const auto out = apply_normalizer(series_of({12}), p);
  CHECK(out.at(0, 0) == 1.0);
  const auto low = apply_normalizer(series_of({-3}), p);
  CHECK(low.at(0, 0) == -1.0);
}

TEST_CASE("normalization is idempotent on the fitting data") {
  Rng rng(5);
  std::vector<double> vals;
  for (int i = 0; i < 200; ++i) vals.push_back(rng.uniform(-4.0, 9.0));
  const auto s = series_of(vals);
  const auto once = apply_normalizer(s, fit_normalizer(s));
  const auto twice = apply_normalizer(once, fit_normalizer(once));
  for (std::size_t i = 0; i < once.n_points(); ++i)
    CHECK(twice.at(i, 0) == Catch::Approx(once.at(i, 0)).margin(1e-12));
}

TEST_CASE("windows: starts, labels, count") {
  auto s = series_of({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  WindowSpec spec{4, 3};
  auto batch = make_windows(s, spec);
  REQUIRE(batch.n_windows() == 3);
  CHECK(batch.starts == std::vector<std::size_t>{0, 3, 6});
  CHECK(batch.labels == std::vector<std::uint8_t>{0, 0, 0});

  s.labels[2] = 1;
  batch = make_windows(s, spec);
  CHECK(batch.labels == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("window count formula by enumeration") {
  Rng rng(17);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.below(400);
    const std::size_t len = 2 + rng.below(30);
    const std::size_t stride = 1 + rng.below(7);
    if (n < len) continue;
    std::size_t count = 0;
    for (std::size_t start = 0; start + len <= n; start += stride) ++count;
    CHECK(window_count(n, WindowSpec{len, stride}) == count);
  }
}

TEST_CASE("window shorter series is an error") {
  const auto s = series_of({1, 2, 3});
  CHECK_THROWS_AS(make_windows(s, WindowSpec{4, 1}), Error);
}

TEST_CASE("sample weights balance classes at mean 1") {
  const auto w = compute_sample_weights({0, 0, 0, 1});
  REQUIRE(w.size() == 4);
  CHECK(w[0] == Catch::Approx(2.0 / 3.0));
  CHECK(w[1] == Catch::Approx(2.0 / 3.0));
  CHECK(w[2] == Catch::Approx(2.0 / 3.0));
  CHECK(w[3] == Catch::Approx(2.0));
  CHECK((w[0] + w[1] + w[2] + w[3]) / 4.0 == Catch::Approx(1.0));

  CHECK(compute_sample_weights({0, 0}) == std::vector<double>{1.0, 1.0});
  CHECK(compute_sample_weights({1, 1}) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("split uses floor boundaries, remainder to last") {
  std::vector<double> vals(100);
  for (int i = 0; i < 100; ++i) vals[i] = i;
  const auto s = series_of(vals);
  const auto parts = split(s, {0.7, 0.15, 0.15});
  CHECK(parts.train.n_points() == 70);
  CHECK(parts.val.n_points() == 15);
  CHECK(parts.test.n_points() == 15);
  CHECK(parts.val.timestamps.front() == 70.0);
  CHECK(parts.test.timestamps.front() == 85.0);

  std::vector<double> ten(10);
  for (int i = 0; i < 10; ++i) ten[i] = i;
  const auto p10 = split(series_of(ten), {0.5, 0.25, 0.25});
  CHECK(p10.train.n_points() == 5);
  CHECK(p10.val.n_points() == 2);
  CHECK(p10.test.n_points() == 3);
}

TEST_CASE("split rejects empty fractions") {
  const auto s = series_of({1, 2, 3, 4});
  CHECK_THROWS_AS(split(s, {1.0, 0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(split(s, {0.5, 0.3, 0.3}), ConfigError);
}
