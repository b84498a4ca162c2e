#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace posehmm {

// Gradient-orientation descriptor layout. The canonical 64x64 patch with
// 8x8-pixel cells and 9 unsigned orientation bins gives length 576.
struct DescriptorConfig {
  int patch_size = 64;
  int cell_size = 8;
  int bins = 9;

  int cells_per_side() const { return patch_size / cell_size; }
  int length() const { return cells_per_side() * cells_per_side() * bins; }

  bool operator==(const DescriptorConfig&) const = default;
};

using Descriptor = std::vector<double>;

// Square grayscale patch at the canonical descriptor scale.
struct Patch {
  int size = 0;
  std::vector<double> pixels;  // row-major, [0, 1]

  double at(int x, int y) const { return pixels[static_cast<size_t>(y) * size + x]; }
  double& at(int x, int y) { return pixels[static_cast<size_t>(y) * size + x]; }
};

// Resamples the box region of `frame` to a patch_size x patch_size patch by
// bilinear interpolation over pixel centers. Parts of the box outside the
// frame read edge-replicated pixels. The box must intersect the frame.
Patch extract_patch(const Frame& frame, const BoundingBox& box, int patch_size = 64);

// Central-difference gradients (edge-clamped), magnitude linearly split
// between the two nearest of `bins` unsigned orientation bin centers at
// angles k*pi/bins, accumulated per cell, then each cell L2-normalized
// with epsilon 1e-6 and clamped to [0, 1].
Descriptor compute_descriptor(const Patch& patch, const DescriptorConfig& config = {});

// `count` patches at uniformly random frames, positions and sizes (each
// dimension uniform in [16, frame dimension]). Deterministic per seed.
std::vector<Patch> sample_negative_patches(std::span<const Frame> frames, int count,
                                           uint64_t seed, int patch_size = 64);

}  // namespace posehmm
