#pragma once

#include <cstdint>
#include <span>

#include "core/features.hpp"

namespace posehmm {

// Linear appearance detector over descriptors. Serves as the HMM state
// output model after normalized_score maps the raw margin into (0, 1].
struct LinearDetector {
  std::vector<double> weights;
  double bias = 0.0;
  double score_min = 0.0;  // calibration range from training data
  double score_max = 0.0;
  double floor = 1e-3;

  bool calibrated() const { return score_max > score_min; }
};

struct WeightedSample {
  Descriptor descriptor;
  int label = 1;        // +1 positive, -1 negative
  double weight = 1.0;  // gamma_i, >= 0
};

struct TrainHyper {
  double regularization = 0.01;  // lambda_r
  int epochs = 50;
  uint64_t seed = 0;
  bool calibrate_on_all_samples = false;  // default: positives only
};

// weights . d + bias
double raw_score(const LinearDetector& det, std::span<const double> descriptor);

// clamp((raw - score_min) / (score_max - score_min), floor, 1); strictly
// positive so no observation ever has probability exactly zero.
double normalized_score(const LinearDetector& det, std::span<const double> descriptor);

// Sets score_min/score_max to the min/max raw score over the descriptors.
// Needs at least two distinct scores.
LinearDetector calibrate_range(LinearDetector det,
                               std::span<const Descriptor> training_descriptors);

// lambda_r/2 |w|^2 + sum_i gamma_i max(0, 1 - y_i (w.x_i + b)); the
// objective the trainer minimizes, exposed for verification.
double hinge_objective(std::span<const WeightedSample> samples, double regularization,
                       std::span<const double> weights, double bias);

// Subgradient of hinge_objective at (weights, bias). At kink points
// (margin exactly 1) the hinge term contributes nothing, matching the
// objective's one-sided derivative from the inactive side.
void hinge_subgradient(std::span<const WeightedSample> samples, double regularization,
                       std::span<const double> weights, double bias,
                       std::span<double> grad_weights, double& grad_bias);

// Deterministic epoch-based subgradient descent with step size
// 1/(lambda_r * t) and per-seed shuffling. Zero-weight samples are dropped
// up front, so their presence cannot perturb the result. Keeps the best
// iterate seen (including the zero vector), so the returned objective
// never exceeds the objective at w = 0. Calibration is populated from the
// positive samples' descriptors.
LinearDetector train_weighted(std::span<const WeightedSample> samples,
                              const TrainHyper& hyper);

}  // namespace posehmm
