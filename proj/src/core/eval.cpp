#include "core/eval.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace posehmm {

double temporal_iou(const EventInterval& a, const EventInterval& b) {
  long long inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  long long uni = (a.end - a.start) + (b.end - b.start) - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

namespace {

void finalize(MatchReport& r) {
  r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
}

struct CandidatePair {
  double iou;
  int truth_index;
  int pred_index;
  const EventInterval* truth;
  const EventInterval* pred;
};

}  // namespace

MatchReport match_intervals(std::span<const EventInterval> truth,
                            std::span<const EventInterval> predicted,
                            double overlap_threshold) {
  std::vector<CandidatePair> pairs;
  for (int ti = 0; ti < static_cast<int>(truth.size()); ++ti) {
    for (int pi = 0; pi < static_cast<int>(predicted.size()); ++pi) {
      if (truth[ti].label != predicted[pi].label) continue;
      double iou = temporal_iou(truth[ti], predicted[pi]);
      if (iou > overlap_threshold)
        pairs.push_back({iou, ti, pi, &truth[ti], &predicted[pi]});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.truth->start != b.truth->start) return a.truth->start < b.truth->start;
    if (a.pred->start != b.pred->start) return a.pred->start < b.pred->start;
    if (a.truth->end != b.truth->end) return a.truth->end < b.truth->end;
    return a.pred->end < b.pred->end;
  });

  std::vector<char> truth_used(truth.size(), 0);
  std::vector<char> pred_used(predicted.size(), 0);
  MatchReport report;
  report.overlap_threshold = overlap_threshold;
  for (const CandidatePair& p : pairs) {
    if (truth_used[p.truth_index] || pred_used[p.pred_index]) continue;
    truth_used[p.truth_index] = 1;
    pred_used[p.pred_index] = 1;
    ++report.tp;
  }
  report.fn = static_cast<long long>(truth.size()) - report.tp;
  report.fp = static_cast<long long>(predicted.size()) - report.tp;
  finalize(report);
  return report;
}

std::vector<double> default_overlap_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(0.05 * k);
  return grid;
}

std::vector<MatchReport> sweep_overlap_thresholds(std::span<const EventInterval> truth,
                                                  std::span<const EventInterval> predicted,
                                                  std::span<const double> grid) {
  require(!grid.empty(), PH_ERR_INVALID_ARGUMENT, "overlap grid is empty");
  for (double g : grid)
    require(g > 0.0 && g < 1.0, PH_ERR_INVALID_ARGUMENT,
            "overlap grid values must lie in (0, 1)");
  std::vector<MatchReport> reports;
  reports.reserve(grid.size());
  for (double g : grid) reports.push_back(match_intervals(truth, predicted, g));
  return reports;
}

std::vector<PrPoint> pr_curve(
    std::span<const std::pair<EventInterval, double>> scored_predictions,
    std::span<const EventInterval> truth, double overlap_threshold) {
  for (const auto& [interval, score] : scored_predictions)
    require(std::isfinite(score), PH_ERR_INVALID_ARGUMENT,
            "prediction scores must be finite");

  std::vector<double> cutoffs;
  cutoffs.reserve(scored_predictions.size());
  for (const auto& [interval, score] : scored_predictions) cutoffs.push_back(score);
  std::sort(cutoffs.begin(), cutoffs.end(), std::greater<>());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());

  std::vector<PrPoint> points;
  points.reserve(cutoffs.size());
  std::vector<EventInterval> retained;
  for (double cutoff : cutoffs) {
    retained.clear();
    for (const auto& [interval, score] : scored_predictions)
      if (score >= cutoff) retained.push_back(interval);
    MatchReport r = match_intervals(truth, retained, overlap_threshold);
    points.push_back({cutoff, r.precision, r.recall});
  }
  return points;
}

}  // namespace posehmm
