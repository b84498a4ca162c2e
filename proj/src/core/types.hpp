#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace posehmm {

// One grayscale video frame, row-major intensities in [0, 1].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  double& at(int x, int y) {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  // Edge-replicated read for out-of-frame coordinates.
  double at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
  }

  void validate() const {
    require(width >= 8 && height >= 8, PH_ERR_VALIDATION,
            "frame smaller than 8x8");
    require(pixels.size() == static_cast<size_t>(width) * height,
            PH_ERR_VALIDATION, "frame pixel buffer size mismatch");
  }
};

// Pixel-space box, top-left origin, inclusive-exclusive.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }

  bool operator==(const BoundingBox&) const = default;
};

inline long long intersection_area(const BoundingBox& a, const BoundingBox& b) {
  long long ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  long long iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  return ix * iy;
}

// One object's bounding boxes through a contiguous frame range.
struct Track {
  int track_id = 0;
  int start_frame = 0;
  std::vector<BoundingBox> boxes;  // boxes[i] belongs to frame start_frame + i

  int end_frame() const { return start_frame + static_cast<int>(boxes.size()); }
  bool covers(int frame) const { return frame >= start_frame && frame < end_frame(); }
  const BoundingBox& box_at(int frame) const { return boxes[frame - start_frame]; }
};

// A labeled half-open frame interval; both annotation and detection shape.
struct EventInterval {
  std::string label;
  int track_id = -1;
  int start = 0;
  int end = 0;
  std::string source;  // annotator or system id, free-form
};

// Generator ground truth: which pose an object shows in one frame.
struct PoseLabel {
  int track_id = 0;
  int frame = 0;
  int pose_index = 0;
};

// A scored candidate interval on one track: the unit NMS and threshold
// filtering operate on. `boxes` are the track's boxes over [start, end).
struct CandidateDetection {
  std::string label;
  int track_id = 0;
  int start = 0;
  int end = 0;
  double log_likelihood = 0.0;
  std::vector<BoundingBox> boxes;
};

}  // namespace posehmm
