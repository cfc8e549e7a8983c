#include <catch2/catch_amalgamated.hpp>

#include "support/oracles.hpp"
#include "tadkit/metrics.hpp"
#include "tadkit/rng.hpp"

using namespace tadkit;

TEST_CASE("extract_events finds maximal runs") {
  const std::vector<double> ts{0, 1, 2, 3, 4};
  const auto ev = extract_events({0, 1, 1, 0, 1}, ts);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].start_time == 1.0);
  CHECK(ev[0].end_time == 2.0);
  CHECK(ev[1].start_time == 4.0);
  CHECK(ev[1].end_time == 4.0);

  CHECK(extract_events({0, 0, 0}, {0, 1, 2}).empty());
  const auto all = extract_events({1, 1, 1}, {0, 1, 2});
  REQUIRE(all.size() == 1);
  CHECK(all[0].start_time == 0.0);
  CHECK(all[0].end_time == 2.0);
}

TEST_CASE("merge_events coalesces below the tolerance") {
  const auto merged = merge_events({{0, 5}, {35, 40}}, 60);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].start_time == 0.0);
  CHECK(merged[0].end_time == 40.0);

  const auto kept = merge_events({{0, 5}, {100, 110}}, 60);
  CHECK(kept.size() == 2);

  const auto identity = merge_events({{0, 5}, {10, 15}}, 0);
  CHECK(identity.size() == 2);
}

TEST_CASE("merge_events is idempotent and transitive") {
  Rng rng(41);
  for (int it = 0; it < 100; ++it) {
    std::vector<AnomalyEvent> ev;
    double t = 0;
    for (int k = 0; k < 8; ++k) {
      t += 1 + rng.uniform() * 100;
      const double start = t;
      t += 1 + rng.uniform() * 30;
      ev.push_back({start, t});
    }
    const double tol = rng.uniform() * 80;
    const auto once = merge_events(ev, tol);
    const auto twice = merge_events(once, tol);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].start_time == twice[i].start_time);
      CHECK(once[i].end_time == twice[i].end_time);
      if (i > 0) CHECK(once[i].start_time - once[i - 1].end_time >= tol);
    }
  }
}

TEST_CASE("merge_events rejects unsorted input") {
  CHECK_THROWS_AS(merge_events({{10, 20}, {0, 5}}, 1), Error);
  CHECK_THROWS_AS(merge_events({{0, 20}, {10, 30}}, 1), Error);
}

TEST_CASE("match_events hand cases") {
  const auto r = match_events({{14, 16}, {95, 105}}, {{10, 20}, {50, 60}}, 0);
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);

  // Early detection: a prediction entirely before the event start counts
  // once the tolerance extends the interval.
  const auto early = match_events({{-30, -20}}, {{0, 10}}, 60);
  CHECK(early.tp == 1);
  CHECK(early.fp == 0);
  CHECK(early.fn == 0);
  const auto late = match_events({{11, 20}}, {{0, 10}}, 60);
  CHECK(late.tp == 0);  // tolerance is directional, never extends the end
  CHECK(late.fp == 1);

  const auto exact = match_events({{0, 4}, {9, 12}}, {{0, 4}, {9, 12}}, 0);
  CHECK(exact.tp == 2);
  CHECK(exact.fp == 0);
  CHECK(exact.fn == 0);
}

TEST_CASE("f_beta formula and conventions") {
  CHECK(f_beta(0.5, 0.5) == Catch::Approx(0.5));
  CHECK(f_beta(1.0, 1.0) == 1.0);
  CHECK(f_beta(0.0, 0.0) == 0.0);
  // With beta=0.5 precision dominates: P=1,R=0.5 scores above P=0.5,R=1.
  CHECK(f_beta(1.0, 0.5) > f_beta(0.5, 1.0));
}

TEST_CASE("precision-weighted beta exceeds recall-weighted when P > R") {
  Rng rng(43);
  for (int it = 0; it < 500; ++it) {
    const double p = rng.uniform();
    const double r = rng.uniform();
    if (p > r && r > 0) CHECK(f_beta(p, r, 0.5) > f_beta(p, r, 2.0));
  }
}

TEST_CASE("evaluate: identity and empty conventions") {
  const std::vector<double> ts{0, 10, 20, 30, 40, 50};
  const std::vector<std::uint8_t> gt{0, 1, 1, 0, 0, 1};
  MetricConfig cfg;

  const auto same = evaluate(gt, gt, ts, cfg);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f_beta == 1.0);

  const auto none = evaluate(std::vector<std::uint8_t>(6, 0), gt, ts, cfg);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f_beta == 0.0);

  const auto both_empty =
      evaluate(std::vector<std::uint8_t>(6, 0), std::vector<std::uint8_t>(6, 0), ts, cfg);
  CHECK(both_empty.precision == 1.0);
  CHECK(both_empty.recall == 1.0);
  CHECK(both_empty.f_beta == 1.0);

  const auto spurious = evaluate(gt, std::vector<std::uint8_t>(6, 0), ts, cfg);
  CHECK(spurious.precision == 0.0);
  CHECK(spurious.recall == 1.0);
  CHECK(spurious.f_beta == 0.0);
}

TEST_CASE("evaluate equals the brute-force oracle on random cases") {
  Rng rng(47);
  for (int it = 0; it < 1000; ++it) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> ts(n);
    double t = 0;
    for (auto& v : ts) {
      t += 0.5 + rng.uniform() * 30;
      v = t;
    }
    std::vector<std::uint8_t> pred(n), gt(n);
    for (auto& f : pred) f = rng.below(3) == 0 ? 1 : 0;
    for (auto& f : gt) f = rng.below(4) == 0 ? 1 : 0;
    MetricConfig cfg;
    cfg.merge_tolerance = rng.uniform() * 40;
    cfg.early_tolerance = rng.uniform() * 40;

    const auto got = evaluate(pred, gt, ts, cfg);
    const auto want =
        oracle::evaluate_counts(pred, gt, ts, cfg.merge_tolerance, cfg.early_tolerance);
    REQUIRE(got.tp == want.tp);
    REQUIRE(got.fp == want.fp);
    REQUIRE(got.fn == want.fn);
  }
}

TEST_CASE("evaluate equals the oracle on the exhaustive small universe") {
  MetricConfig cfg;
  cfg.merge_tolerance = 2.0;
  cfg.early_tolerance = 1.0;
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = double(i);
    // Fixed ground truth: alternating blocks.
    std::vector<std::uint8_t> gt(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] = (i / 3) % 2 == 1 ? 1 : 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      std::vector<std::uint8_t> pred(n);
      for (std::size_t i = 0; i < n; ++i) pred[i] = (mask >> i) & 1;
      const auto got = evaluate(pred, gt, ts, cfg);
      const auto want =
          oracle::evaluate_counts(pred, gt, ts, cfg.merge_tolerance, cfg.early_tolerance);
      REQUIRE(got.tp == want.tp);
      REQUIRE(got.fp == want.fp);
      REQUIRE(got.fn == want.fn);
    }
  }
}

TEST_CASE("counts are consistent and translation invariant") {
  Rng rng(53);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> ts(n);
    double t = 0;
    for (auto& v : ts) {
      t += 1 + rng.uniform() * 5;
      v = t;
    }
    std::vector<std::uint8_t> pred(n), gt(n);
    for (auto& f : pred) f = rng.below(3) == 0 ? 1 : 0;
    for (auto& f : gt) f = rng.below(3) == 0 ? 1 : 0;
    MetricConfig cfg;

    const auto r = evaluate(pred, gt, ts, cfg);
    const auto gt_events = merge_events(extract_events(gt, ts), cfg.merge_tolerance);
    const auto pred_events = merge_events(extract_events(pred, ts), cfg.merge_tolerance);
    CHECK(r.tp + r.fn == gt_events.size());
    CHECK(r.fp <= pred_events.size());

    std::vector<double> shifted(ts);
    for (auto& v : shifted) v += 12345.0;
    const auto rs = evaluate(pred, gt, shifted, cfg);
    CHECK(rs.tp == r.tp);
    CHECK(rs.fp == r.fp);
    CHECK(rs.fn == r.fn);
    CHECK(rs.f_beta == r.f_beta);
  }
}

TEST_CASE("event report serializes with 6-decimal scores") {
  EventReport r;
  r.tp = 1;
  r.fp = 1;
  r.fn = 1;
  r.precision = 0.5;
  r.recall = 0.5;
  r.f_beta = 0.5;
  r.matched = {{0, 1}};
  const json j = r;
  CHECK(j.at("tp") == 1);
  CHECK(j.at("precision") == 0.5);
  CHECK(j.at("matched")[0][0] == 0);
  CHECK(j.at("matched")[0][1] == 1);
}
