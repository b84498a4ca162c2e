#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "core/detector.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace posehmm;

namespace {

Descriptor random_descriptor(Rng& rng, size_t dim) {
  Descriptor d(dim);
  for (double& v : d) v = rng.uniform(-1.0, 1.0);
  return d;
}

std::vector<WeightedSample> toy_separable_set() {
  auto pos = [](double x, double y) {
    return WeightedSample{{x, y}, +1, 1.0};
  };
  auto neg = [](double x, double y) {
    return WeightedSample{{x, y}, -1, 1.0};
  };
  return {pos(1.0, 0.0),  pos(1.1, 0.2),   pos(0.9, -0.1),
          neg(-1.0, 0.0), neg(-1.05, 0.15), neg(-0.95, -0.2)};
}

}  // namespace

TEST_CASE("raw_score: zero detector scores zero") {
  LinearDetector det;
  det.weights.assign(5, 0.0);
  Rng rng(1);
  CHECK(raw_score(det, random_descriptor(rng, 5)) == 0.0);
}

TEST_CASE("raw_score: reciprocal weights score one") {
  Rng rng(2);
  Descriptor d = random_descriptor(rng, 8);
  double norm_sq = 0.0;
  for (double v : d) norm_sq += v * v;
  LinearDetector det;
  det.weights.resize(8);
  for (size_t k = 0; k < 8; ++k) det.weights[k] = d[k] / norm_sq;
  CHECK(raw_score(det, d) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("raw_score: matches an independent dot product") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    LinearDetector det;
    det.weights = random_descriptor(rng, 32);
    det.bias = rng.uniform(-1.0, 1.0);
    Descriptor d = random_descriptor(rng, 32);
    long double acc = det.bias;
    for (size_t k = 0; k < d.size(); ++k)
      acc += static_cast<long double>(det.weights[k]) * d[k];
    CHECK(std::abs(raw_score(det, d) - static_cast<double>(acc)) <= 1e-12);
  }
}

TEST_CASE("raw_score: dimension mismatch is an error") {
  LinearDetector det;
  det.weights.assign(4, 0.0);
  Descriptor d(5, 0.0);
  CHECK_THROWS_AS(raw_score(det, d), Error);
}

TEST_CASE("calibrate_range: min and max of the seen scores") {
  LinearDetector det;
  det.weights = {1.0};
  det = calibrate_range(det, std::vector<Descriptor>{{-2.0}, {0.0}, {3.0}});
  CHECK(det.score_min == -2.0);
  CHECK(det.score_max == 3.0);
}

TEST_CASE("calibrate_range: identical scores are a degenerate calibration") {
  LinearDetector det;
  det.weights = {1.0};
  std::vector<Descriptor> same{{0.5}, {0.5}, {0.5}};
  CHECK_THROWS_WITH_AS(calibrate_range(det, same), "degenerate calibration", Error);
  std::vector<Descriptor> one{{0.5}};
  CHECK_THROWS_AS(calibrate_range(det, one), Error);
}

TEST_CASE("calibrate_range: agrees with a sort-based oracle") {
  Rng rng(4);
  LinearDetector det;
  det.weights = random_descriptor(rng, 16);
  det.bias = 0.3;
  std::vector<Descriptor> descriptors;
  std::vector<double> scores;
  for (int k = 0; k < 100; ++k) {
    descriptors.push_back(random_descriptor(rng, 16));
    scores.push_back(raw_score(det, descriptors.back()));
  }
  std::sort(scores.begin(), scores.end());
  det = calibrate_range(det, descriptors);
  CHECK(det.score_min == scores.front());
  CHECK(det.score_max == scores.back());
}

TEST_CASE("normalized_score: clamp behaviour at and beyond the range") {
  LinearDetector det;
  det.weights = {1.0};
  det.score_min = -1.0;
  det.score_max = 3.0;
  CHECK(normalized_score(det, Descriptor{3.0}) == 1.0);        // raw == max
  CHECK(normalized_score(det, Descriptor{9.0}) == 1.0);        // above max
  CHECK(normalized_score(det, Descriptor{-1.0}) == det.floor); // raw == min
  CHECK(normalized_score(det, Descriptor{-5.0}) == det.floor); // below min
  CHECK(normalized_score(det, Descriptor{1.0}) == doctest::Approx(0.5));  // midway
}

TEST_CASE("normalized_score: uncalibrated detector is an error") {
  LinearDetector det;
  det.weights = {1.0};
  CHECK_THROWS_AS(normalized_score(det, Descriptor{0.0}), Error);
}

TEST_CASE("normalized_score: nondecreasing in the raw score, always in [floor, 1]") {
  LinearDetector det;
  det.weights = {1.0};
  det.score_min = 0.0;
  det.score_max = 1.0;
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double s = normalized_score(det, Descriptor{-2.0 + 0.05 * k});
    CHECK(s >= det.floor);
    CHECK(s <= 1.0);
    if (k > 0) CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("train_weighted: zero-weight samples are bit-neutral") {
  std::vector<WeightedSample> base = toy_separable_set();
  std::vector<WeightedSample> padded = base;
  padded.insert(padded.begin() + 2, WeightedSample{{5.0, -3.0}, +1, 0.0});
  TrainHyper hyper;
  hyper.seed = 11;
  LinearDetector a = train_weighted(base, hyper);
  LinearDetector b = train_weighted(padded, hyper);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  CHECK(a.score_min == b.score_min);
  CHECK(a.score_max == b.score_max);
}

TEST_CASE("train_weighted: weight/regularizer rescaling reproduces the optimum") {
  std::vector<WeightedSample> base = toy_separable_set();
  std::vector<WeightedSample> scaled = base;
  for (WeightedSample& s : scaled) s.weight *= 4.0;  // power of two: exact
  TrainHyper hyper;
  hyper.seed = 12;
  TrainHyper hyper_scaled = hyper;
  hyper_scaled.regularization = hyper.regularization * 4.0;
  LinearDetector a = train_weighted(base, hyper);
  LinearDetector b = train_weighted(scaled, hyper_scaled);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("train_weighted: separates the separable toy set") {
  LinearDetector det = train_weighted(toy_separable_set(), TrainHyper{.seed = 13});
  double worst_pos = 1e9, best_neg = -1e9;
  for (const WeightedSample& s : toy_separable_set()) {
    double score = raw_score(det, s.descriptor);
    if (s.label > 0)
      worst_pos = std::min(worst_pos, score);
    else
      best_neg = std::max(best_neg, score);
  }
  CHECK(worst_pos > best_neg);
}

TEST_CASE("train_weighted: objective never exceeds the zero model's") {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<WeightedSample> samples;
    for (int k = 0; k < 30; ++k) {
      WeightedSample s;
      s.descriptor = random_descriptor(rng, 12);
      s.label = k % 2 == 0 ? 1 : -1;
      s.weight = rng.uniform(0.0, 2.0);
      samples.push_back(std::move(s));
    }
    samples[0].weight = 1.0;  // guarantee both labels have support
    samples[1].weight = 1.0;
    TrainHyper hyper;
    hyper.seed = 100 + trial;
    LinearDetector det = train_weighted(samples, hyper);
    double at_zero =
        hinge_objective(samples, hyper.regularization, Descriptor(12, 0.0), 0.0);
    double at_trained =
        hinge_objective(samples, hyper.regularization, det.weights, det.bias);
    CHECK(at_trained <= at_zero + 1e-9);
  }
}

TEST_CASE("train_weighted: one-sided sample sets are degenerate") {
  std::vector<WeightedSample> all_pos{{{1.0, 0.0}, +1, 1.0}, {{0.5, 0.5}, +1, 1.0}};
  CHECK_THROWS_WITH_AS(train_weighted(all_pos, TrainHyper{}),
                       "degenerate training set", Error);
  // A negative present but at weight zero is still degenerate.
  all_pos.push_back({{-1.0, 0.0}, -1, 0.0});
  CHECK_THROWS_AS(train_weighted(all_pos, TrainHyper{}), Error);
}

TEST_CASE("train_weighted: deterministic per seed") {
  Rng rng(15);
  std::vector<WeightedSample> samples;
  for (int k = 0; k < 40; ++k) {
    samples.push_back({random_descriptor(rng, 20), k % 2 == 0 ? 1 : -1,
                       rng.uniform(0.1, 1.5)});
  }
  LinearDetector a = train_weighted(samples, TrainHyper{.seed = 77});
  LinearDetector b = train_weighted(samples, TrainHyper{.seed = 77});
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  LinearDetector c = train_weighted(samples, TrainHyper{.seed = 78});
  CHECK(a.weights != c.weights);
}

TEST_CASE("hinge_subgradient: matches central finite differences off the kinks") {
  Rng rng(16);
  const size_t dim = 6;
  int checked = 0;
  while (checked < 20) {
    std::vector<WeightedSample> samples;
    for (int k = 0; k < 8; ++k)
      samples.push_back({random_descriptor(rng, dim), k % 2 == 0 ? 1 : -1,
                         rng.uniform(0.1, 2.0)});
    Descriptor w = random_descriptor(rng, dim);
    double b = rng.uniform(-0.5, 0.5);
    const double reg = 0.05;

    bool near_kink = false;
    for (const WeightedSample& s : samples) {
      double margin = s.label * (raw_score({w, 0.0}, s.descriptor) + b);
      if (std::abs(1.0 - margin) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;

    Descriptor grad(dim, 0.0);
    double grad_b = 0.0;
    hinge_subgradient(samples, reg, w, b, grad, grad_b);

    const double h = 1e-6;
    for (size_t k = 0; k < dim; ++k) {
      Descriptor lo = w, hi = w;
      lo[k] -= h;
      hi[k] += h;
      double fd = (hinge_objective(samples, reg, hi, b) -
                   hinge_objective(samples, reg, lo, b)) /
                  (2.0 * h);
      CHECK(std::abs(grad[k] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
    double fd_b = (hinge_objective(samples, reg, w, b + h) -
                   hinge_objective(samples, reg, w, b - h)) /
                  (2.0 * h);
    CHECK(std::abs(grad_b - fd_b) <= 1e-4 * std::max(1.0, std::abs(fd_b)));
    ++checked;
  }
}
