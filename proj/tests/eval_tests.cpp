#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "core/eval.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace posehmm;

namespace {

EventInterval iv(const std::string& label, int start, int end) {
  return {label, -1, start, end, ""};
}

std::vector<EventInterval> random_intervals(Rng& rng, int count) {
  std::vector<EventInterval> out;
  for (int k = 0; k < count; ++k) {
    int start = static_cast<int>(rng.uniform_int(0, 60));
    int len = static_cast<int>(rng.uniform_int(1, 30));
    out.push_back(iv(rng.uniform01() < 0.5 ? "a" : "b", start, start + len));
  }
  return out;
}

// Maximum one-to-one matching by bitmask DP over the predictions.
long long optimal_tp(std::span<const EventInterval> truth,
                     std::span<const EventInterval> predicted, double threshold) {
  int P = static_cast<int>(predicted.size());
  std::vector<long long> dp(static_cast<size_t>(1) << P, 0);
  for (const EventInterval& t : truth) {
    std::vector<long long> next = dp;
    for (size_t mask = 0; mask < dp.size(); ++mask) {
      for (int p = 0; p < P; ++p) {
        if (mask & (size_t{1} << p)) continue;
        if (t.label != predicted[p].label) continue;
        if (temporal_iou(t, predicted[p]) <= threshold) continue;
        size_t with = mask | (size_t{1} << p);
        next[with] = std::max(next[with], dp[mask] + 1);
      }
    }
    dp = std::move(next);
  }
  long long best = 0;
  for (long long v : dp) best = std::max(best, v);
  return best;
}

}  // namespace

TEST_CASE("temporal_iou: identical, disjoint, and partial overlap") {
  CHECK(temporal_iou(iv("a", 3, 17), iv("a", 3, 17)) == 1.0);
  CHECK(temporal_iou(iv("a", 0, 10), iv("a", 10, 20)) == 0.0);
  CHECK(temporal_iou(iv("a", 0, 20), iv("a", 10, 30)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("match_intervals: identical sets match perfectly") {
  std::vector<EventInterval> truth{iv("a", 0, 10), iv("b", 20, 35), iv("a", 50, 70)};
  MatchReport r = match_intervals(truth, truth, 0.5);
  CHECK(r.tp == 3);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
  CHECK(r.f1 == doctest::Approx(1.0));
}

TEST_CASE("match_intervals: empty predictions") {
  std::vector<EventInterval> truth{iv("a", 0, 10), iv("a", 20, 30)};
  MatchReport r = match_intervals(truth, {}, 0.1);
  CHECK(r.tp == 0);
  CHECK(r.fn == 2);
  CHECK(r.fp == 0);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
}

TEST_CASE("match_intervals: labels partition the matching") {
  std::vector<EventInterval> truth{iv("a", 0, 10)};
  std::vector<EventInterval> pred{iv("b", 0, 10)};
  MatchReport r = match_intervals(truth, pred, 0.1);
  CHECK(r.tp == 0);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
}

TEST_CASE("match_intervals: 4-truth/5-prediction case with a double overlap") {
  std::vector<EventInterval> truth{iv("a", 0, 10), iv("a", 20, 30), iv("a", 40, 50),
                                   iv("a", 60, 70)};
  std::vector<EventInterval> pred{iv("a", 0, 10), iv("a", 21, 31), iv("a", 39, 49),
                                  iv("a", 62, 75), iv("a", 5, 14)};
  MatchReport r = match_intervals(truth, pred, 0.3);
  CHECK(r.tp == 4);
  CHECK(r.fp == 1);
  CHECK(r.fn == 0);
  CHECK(r.tp == optimal_tp(truth, pred, 0.3));
}

TEST_CASE("match_intervals: counting identities on random sets") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto truth = random_intervals(rng, static_cast<int>(rng.uniform_int(0, 10)));
    auto pred = random_intervals(rng, static_cast<int>(rng.uniform_int(0, 10)));
    MatchReport r = match_intervals(truth, pred, 0.25);
    CHECK(r.tp + r.fn == static_cast<long long>(truth.size()));
    CHECK(r.tp + r.fp == static_cast<long long>(pred.size()));
  }
}

TEST_CASE("match_intervals: F1 symmetry on random pairs") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_intervals(rng, static_cast<int>(rng.uniform_int(1, 12)));
    auto b = random_intervals(rng, static_cast<int>(rng.uniform_int(1, 12)));
    double threshold = rng.uniform(0.05, 0.9);
    MatchReport ab = match_intervals(a, b, threshold);
    MatchReport ba = match_intervals(b, a, threshold);
    CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-12));
    CHECK(ab.tp == ba.tp);
    CHECK(ab.fp == ba.fn);
    CHECK(ab.fn == ba.fp);
  }
}

TEST_CASE("match_intervals: greedy never exceeds the optimal matching") {
  Rng rng(23);
  int equal = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    auto truth = random_intervals(rng, static_cast<int>(rng.uniform_int(1, 8)));
    auto pred = random_intervals(rng, static_cast<int>(rng.uniform_int(1, 8)));
    double threshold = rng.uniform(0.05, 0.7);
    long long greedy = match_intervals(truth, pred, threshold).tp;
    long long best = optimal_tp(truth, pred, threshold);
    CHECK(greedy <= best);
    if (greedy == best) ++equal;
  }
  // Diagnostic, not a gate: greedy should agree with optimal nearly always.
  MESSAGE("greedy == optimal in ", equal, "/", trials, " trials");
  CHECK(equal >= trials * 0.95);
}

TEST_CASE("sweep_overlap_thresholds: identical and disjoint sets") {
  std::vector<EventInterval> truth{iv("a", 0, 10), iv("b", 30, 45)};
  auto grid = default_overlap_grid();
  CHECK(grid.size() == 19);
  for (const MatchReport& r : sweep_overlap_thresholds(truth, truth, grid))
    CHECK(r.f1 == doctest::Approx(1.0));
  std::vector<EventInterval> far{iv("a", 100, 110), iv("b", 130, 145)};
  for (const MatchReport& r : sweep_overlap_thresholds(truth, far, grid))
    CHECK(r.f1 == 0.0);
}

TEST_CASE("sweep_overlap_thresholds: matches per-threshold recomputation and is monotone") {
  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    auto truth = random_intervals(rng, 8);
    auto pred = random_intervals(rng, 9);
    auto grid = default_overlap_grid();
    auto curve = sweep_overlap_thresholds(truth, pred, grid);
    REQUIRE(curve.size() == grid.size());
    double prev = 2.0;
    for (size_t k = 0; k < grid.size(); ++k) {
      MatchReport direct = match_intervals(truth, pred, grid[k]);
      CHECK(curve[k].tp == direct.tp);
      CHECK(curve[k].f1 == direct.f1);
      CHECK(curve[k].f1 <= prev + 1e-12);
      prev = curve[k].f1;
    }
  }
}

TEST_CASE("sweep_overlap_thresholds: rejects bad grids") {
  std::vector<EventInterval> truth{iv("a", 0, 10)};
  std::vector<double> empty;
  CHECK_THROWS(sweep_overlap_thresholds(truth, truth, empty));
  std::vector<double> bad{0.0, 0.5};
  CHECK_THROWS(sweep_overlap_thresholds(truth, truth, bad));
}

TEST_CASE("pr_curve: all-correct and all-wrong prediction sets") {
  std::vector<EventInterval> truth{iv("a", 0, 10), iv("a", 20, 30)};
  std::vector<std::pair<EventInterval, double>> good{{iv("a", 0, 10), 2.0},
                                                     {iv("a", 20, 30), 1.0}};
  auto points = pr_curve(good, truth, 0.5);
  REQUIRE(points.size() == 2);
  CHECK(points.back().precision == doctest::Approx(1.0));
  CHECK(points.back().recall == doctest::Approx(1.0));

  std::vector<std::pair<EventInterval, double>> bad{{iv("a", 100, 110), 2.0},
                                                    {iv("a", 200, 210), 1.0}};
  for (const PrPoint& p : pr_curve(bad, truth, 0.5)) CHECK(p.precision == 0.0);
}

TEST_CASE("pr_curve: each point equals an independent match run at that cutoff") {
  Rng rng(25);
  auto truth = random_intervals(rng, 6);
  std::vector<std::pair<EventInterval, double>> scored;
  for (const EventInterval& p : random_intervals(rng, 10))
    scored.emplace_back(p, rng.uniform(-5.0, 5.0));
  auto points = pr_curve(scored, truth, 0.2);
  for (const PrPoint& point : points) {
    std::vector<EventInterval> retained;
    for (const auto& [interval, score] : scored)
      if (score >= point.cutoff) retained.push_back(interval);
    MatchReport direct = match_intervals(truth, retained, 0.2);
    CHECK(point.precision == direct.precision);
    CHECK(point.recall == direct.recall);
  }
}
