#pragma once

#include <span>
#include <utility>
#include <vector>

#include "core/types.hpp"

namespace posehmm {

struct MatchReport {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double precision = 0.0;  // 0 when tp + fp == 0
  double recall = 0.0;     // 0 when tp + fn == 0
  double f1 = 0.0;         // 0 when precision + recall == 0
  double overlap_threshold = 0.0;
};

// Intersection over union of two half-open frame intervals; 0 if disjoint.
// Labels are not consulted here.
double temporal_iou(const EventInterval& a, const EventInterval& b);

// One-to-one greedy matching per label: candidate pairs with equal labels
// and IoU strictly above the threshold, processed in descending IoU order
// (ties by earlier truth start, then earlier prediction start, then ends);
// each interval is used at most once. Unmatched predictions count as FP,
// unmatched truths as FN.
MatchReport match_intervals(std::span<const EventInterval> truth,
                            std::span<const EventInterval> predicted,
                            double overlap_threshold);

// 0.05, 0.10, ..., 0.95.
std::vector<double> default_overlap_grid();

std::vector<MatchReport> sweep_overlap_thresholds(std::span<const EventInterval> truth,
                                                  std::span<const EventInterval> predicted,
                                                  std::span<const double> grid);

struct PrPoint {
  double cutoff = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Sweeps a score cutoff over all distinct prediction scores, descending;
// at each cutoff the predictions with score >= cutoff are matched against
// the truth at the fixed overlap threshold.
std::vector<PrPoint> pr_curve(
    std::span<const std::pair<EventInterval, double>> scored_predictions,
    std::span<const EventInterval> truth, double overlap_threshold);

}  // namespace posehmm
