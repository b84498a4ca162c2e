#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "core/error.hpp"
#include "core/features.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace posehmm;

namespace {

Frame make_frame(int w, int h, double value = 0.5) {
  Frame f;
  f.width = w;
  f.height = h;
  f.pixels.assign(static_cast<size_t>(w) * h, value);
  return f;
}

Frame ramp_frame(int w, int h) {
  Frame f = make_frame(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      f.at(x, y) = (0.37 * x + 0.59 * y) / (0.37 * w + 0.59 * h);
  return f;
}

// Straight-line re-statement of the descriptor definition, kept deliberately
// naive: per-pixel gradient, angle fold, two-bin split, per-cell L2.
Descriptor reference_descriptor(const Patch& patch) {
  const int size = patch.size;
  const int bins = 9;
  const int cell = 8;
  const int cells = size / cell;
  std::vector<double> hist(static_cast<size_t>(cells) * cells * bins, 0.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int xm = x > 0 ? x - 1 : 0;
      int xp = x < size - 1 ? x + 1 : size - 1;
      int ym = y > 0 ? y - 1 : 0;
      int yp = y < size - 1 ? y + 1 : size - 1;
      double gx = patch.at(xp, y) - patch.at(xm, y);
      double gy = patch.at(x, yp) - patch.at(x, ym);
      double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      while (angle < 0.0) angle += M_PI;
      while (angle >= M_PI) angle -= M_PI;
      double pos = angle / (M_PI / bins);
      int b0 = static_cast<int>(std::floor(pos));
      double frac = pos - b0;
      int cell_index = (y / cell) * cells + (x / cell);
      hist[static_cast<size_t>(cell_index) * bins + b0 % bins] += mag * (1.0 - frac);
      hist[static_cast<size_t>(cell_index) * bins + (b0 + 1) % bins] += mag * frac;
    }
  }
  for (int c = 0; c < cells * cells; ++c) {
    double sq = 0.0;
    for (int b = 0; b < bins; ++b) {
      double v = hist[static_cast<size_t>(c) * bins + b];
      sq += v * v;
    }
    double norm = std::sqrt(sq + 1e-6 * 1e-6);
    for (int b = 0; b < bins; ++b) {
      double& v = hist[static_cast<size_t>(c) * bins + b];
      v = std::min(1.0, std::max(0.0, v / norm));
    }
  }
  return hist;
}

Patch random_patch(Rng& rng) {
  Patch p;
  p.size = 64;
  p.pixels.resize(64 * 64);
  for (double& v : p.pixels) v = rng.uniform01();
  return p;
}

}  // namespace

TEST_CASE("extract_patch: same-size box is an identity copy") {
  Frame f = ramp_frame(64, 64);
  Patch p = extract_patch(f, {0, 0, 64, 64});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) CHECK(p.at(x, y) == f.at(x, y));
}

TEST_CASE("extract_patch: uniform region resamples to the same constant") {
  Frame f = make_frame(200, 160, 0.7312);
  Patch p = extract_patch(f, {10, 5, 128, 128});
  for (double v : p.pixels) CHECK(v == doctest::Approx(0.7312).epsilon(1e-12));
}

TEST_CASE("extract_patch: matches direct bilinear evaluation on a ramp") {
  Frame f = ramp_frame(120, 100);
  BoundingBox box{31, 22, 32, 48};
  Patch p = extract_patch(f, box);
  for (int py = 0; py < 64; ++py) {
    for (int px = 0; px < 64; ++px) {
      double sx = box.x + (px + 0.5) * box.w / 64.0 - 0.5;
      double sy = box.y + (py + 0.5) * box.h / 64.0 - 0.5;
      int x0 = static_cast<int>(std::floor(sx));
      int y0 = static_cast<int>(std::floor(sy));
      double wx = sx - x0;
      double wy = sy - y0;
      auto at = [&](int x, int y) {
        x = std::clamp(x, 0, f.width - 1);
        y = std::clamp(y, 0, f.height - 1);
        return f.at(x, y);
      };
      double expected = (1 - wy) * ((1 - wx) * at(x0, y0) + wx * at(x0 + 1, y0)) +
                        wy * ((1 - wx) * at(x0, y0 + 1) + wx * at(x0 + 1, y0 + 1));
      CHECK(p.at(px, py) == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("extract_patch: out-of-frame area replicates edges") {
  Frame f = make_frame(40, 40, 0.25);
  // Box hangs off the top-left corner; the replicated content is constant.
  Patch p = extract_patch(f, {-16, -16, 32, 32});
  for (double v : p.pixels) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("extract_patch: box outside the frame is an error") {
  Frame f = make_frame(40, 40);
  CHECK_THROWS_AS(extract_patch(f, {100, 100, 32, 32}), Error);
  CHECK_THROWS_AS(extract_patch(f, {0, 0, 4, 32}), Error);  // under minimum size
}

TEST_CASE("compute_descriptor: constant patch gives the zero descriptor") {
  Patch p;
  p.size = 64;
  p.pixels.assign(64 * 64, 0.42);
  Descriptor d = compute_descriptor(p);
  CHECK(d.size() == 576);
  for (double v : d) CHECK(v == 0.0);
}

TEST_CASE("compute_descriptor: vertical step edge lands in the first bin") {
  Patch p;
  p.size = 64;
  p.pixels.assign(64 * 64, 0.0);
  for (int y = 0; y < 64; ++y)
    for (int x = 32; x < 64; ++x) p.at(x, y) = 1.0;
  Descriptor d = compute_descriptor(p);
  // Cells straddling the edge (cell columns 3 and 4): all mass in bin 0,
  // the horizontal-gradient orientation.
  for (int cy = 0; cy < 8; ++cy) {
    for (int cx : {3, 4}) {
      const double* cell = d.data() + (static_cast<size_t>(cy) * 8 + cx) * 9;
      CHECK(cell[0] > 0.5);
      for (int b = 1; b < 9; ++b) CHECK(cell[b] == 0.0);
    }
  }
}

TEST_CASE("compute_descriptor: equals the literal reference on random patches") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    Patch p = random_patch(rng);
    Descriptor fast = compute_descriptor(p);
    Descriptor slow = reference_descriptor(p);
    REQUIRE(fast.size() == slow.size());
    for (size_t k = 0; k < fast.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) <= 1e-9);
  }
}

TEST_CASE("compute_descriptor: invariant to constant intensity offsets") {
  // Dyadic pixel grid (as 8-bit data is) so the offset addition is exact
  // and the invariance can be asserted bit-for-bit.
  Rng rng(43);
  Patch p;
  p.size = 64;
  p.pixels.resize(64 * 64);
  for (double& v : p.pixels)
    v = static_cast<double>(rng.uniform_int(0, 255)) / 512.0;
  Patch shifted = p;
  for (double& v : shifted.pixels) v += 0.25;
  Descriptor a = compute_descriptor(p);
  Descriptor b = compute_descriptor(shifted);
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("compute_descriptor: deterministic and fixed-length") {
  Rng rng(44);
  Patch p = random_patch(rng);
  Descriptor a = compute_descriptor(p);
  Descriptor b = compute_descriptor(p);
  CHECK(a == b);
  CHECK(static_cast<int>(a.size()) == DescriptorConfig{}.length());
}

TEST_CASE("sample_negative_patches: zero count gives an empty list") {
  std::vector<Frame> frames{make_frame(64, 64)};
  CHECK(sample_negative_patches(frames, 0, 7).empty());
}

TEST_CASE("sample_negative_patches: deterministic per seed") {
  std::vector<Frame> frames{ramp_frame(100, 80), ramp_frame(90, 90)};
  auto a = sample_negative_patches(frames, 25, 99);
  auto b = sample_negative_patches(frames, 25, 99);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k].pixels == b[k].pixels);
  auto c = sample_negative_patches(frames, 25, 100);
  bool any_differs = false;
  for (size_t k = 0; k < a.size(); ++k)
    if (a[k].pixels != c[k].pixels) any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("sample_negative_patches: frame choice is uniform within 3 sigma") {
  // Two frames with distinct constant intensities so patches identify
  // their source frame. n = 1000, p = 0.5: 3 sigma = 3 * sqrt(250) = 47.43.
  std::vector<Frame> frames{make_frame(80, 80, 0.2), make_frame(80, 80, 0.8)};
  auto patches = sample_negative_patches(frames, 1000, 2024);
  int from_first = 0;
  for (const Patch& p : patches)
    if (p.pixels[0] < 0.5) ++from_first;
  CHECK(std::abs(from_first - 500) <= 47.43);
}
