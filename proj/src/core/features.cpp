#include "core/features.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace posehmm {

Patch extract_patch(const Frame& frame, const BoundingBox& box, int patch_size) {
  frame.validate();
  require(box.w >= 8 && box.h >= 8, PH_ERR_VALIDATION, "bounding box smaller than 8x8");
  bool intersects = box.x < frame.width && box.x + box.w > 0 && box.y < frame.height &&
                    box.y + box.h > 0;
  require(intersects, PH_ERR_VALIDATION, "bounding box does not intersect frame");

  Patch patch;
  patch.size = patch_size;
  patch.pixels.resize(static_cast<size_t>(patch_size) * patch_size);

  // Pixel-center mapping: when the box is already patch_size x patch_size
  // this reduces to an identity copy.
  const double sx = static_cast<double>(box.w) / patch_size;
  const double sy = static_cast<double>(box.h) / patch_size;
  for (int py = 0; py < patch_size; ++py) {
    double fy = box.y + (py + 0.5) * sy - 0.5;
    double fy0 = std::floor(fy);
    double wy = fy - fy0;
    int y0 = static_cast<int>(fy0);
    for (int px = 0; px < patch_size; ++px) {
      double fx = box.x + (px + 0.5) * sx - 0.5;
      double fx0 = std::floor(fx);
      double wx = fx - fx0;
      int x0 = static_cast<int>(fx0);
      double v00 = frame.at_clamped(x0, y0);
      double v10 = frame.at_clamped(x0 + 1, y0);
      double v01 = frame.at_clamped(x0, y0 + 1);
      double v11 = frame.at_clamped(x0 + 1, y0 + 1);
      patch.at(px, py) = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) +
                         wy * ((1.0 - wx) * v01 + wx * v11);
    }
  }
  return patch;
}

Descriptor compute_descriptor(const Patch& patch, const DescriptorConfig& config) {
  require(patch.size == config.patch_size, PH_ERR_DIMENSION_MISMATCH,
          "patch size does not match descriptor config");
  require(config.patch_size % config.cell_size == 0, PH_ERR_INVALID_ARGUMENT,
          "cell size must divide patch size");
  const int cells = config.cells_per_side();
  const int bins = config.bins;
  const int size = patch.size;
  const double bin_width = M_PI / bins;

  Descriptor desc(static_cast<size_t>(cells) * cells * bins, 0.0);
  auto clampi = [size](int v) { return std::clamp(v, 0, size - 1); };

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double gx = patch.at(clampi(x + 1), y) - patch.at(clampi(x - 1), y);
      double gy = patch.at(x, clampi(y + 1)) - patch.at(x, clampi(y - 1));
      double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      // Unsigned orientation in [0, pi), split between the two nearest
      // bin centers at angles k * pi / bins (wrapping pi back to 0).
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += M_PI;
      if (angle >= M_PI) angle -= M_PI;
      double pos = angle / bin_width;
      int lo = static_cast<int>(std::floor(pos));
      double frac = pos - lo;
      int bin0 = lo % bins;
      int bin1 = (lo + 1) % bins;
      int cell = (y / config.cell_size) * cells + (x / config.cell_size);
      desc[static_cast<size_t>(cell) * bins + bin0] += mag * (1.0 - frac);
      desc[static_cast<size_t>(cell) * bins + bin1] += mag * frac;
    }
  }

  const double eps = 1e-6;
  for (int cell = 0; cell < cells * cells; ++cell) {
    double* v = desc.data() + static_cast<size_t>(cell) * bins;
    double sq = 0.0;
    for (int b = 0; b < bins; ++b) sq += v[b] * v[b];
    double norm = std::sqrt(sq + eps * eps);
    for (int b = 0; b < bins; ++b) v[b] = std::clamp(v[b] / norm, 0.0, 1.0);
  }
  return desc;
}

std::vector<Patch> sample_negative_patches(std::span<const Frame> frames, int count,
                                           uint64_t seed, int patch_size) {
  if (count <= 0) return {};
  require(!frames.empty(), PH_ERR_INVALID_ARGUMENT, "no frames to sample negatives from");

  std::vector<Patch> patches;
  patches.reserve(count);
  Rng rng(seed);
  for (int k = 0; k < count; ++k) {
    const Frame& frame = frames[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(frames.size()) - 1))];
    int w = static_cast<int>(rng.uniform_int(16, frame.width));
    int h = static_cast<int>(rng.uniform_int(16, frame.height));
    int x = static_cast<int>(rng.uniform_int(0, frame.width - w));
    int y = static_cast<int>(rng.uniform_int(0, frame.height - h));
    patches.push_back(extract_patch(frame, {x, y, w, h}, patch_size));
  }
  return patches;
}

}  // namespace posehmm
