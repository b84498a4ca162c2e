#include "core/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace posehmm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double raw_score(const LinearDetector& det, std::span<const double> descriptor) {
  require(det.weights.size() == descriptor.size(), PH_ERR_DIMENSION_MISMATCH,
          "descriptor length does not match detector");
  return dot(det.weights, descriptor) + det.bias;
}

double normalized_score(const LinearDetector& det, std::span<const double> descriptor) {
  require(det.calibrated(), PH_ERR_UNCALIBRATED, "detector is not calibrated");
  double raw = raw_score(det, descriptor);
  double scaled = (raw - det.score_min) / (det.score_max - det.score_min);
  return std::clamp(scaled, det.floor, 1.0);
}

LinearDetector calibrate_range(LinearDetector det,
                               std::span<const Descriptor> training_descriptors) {
  require(training_descriptors.size() >= 2, PH_ERR_DEGENERATE_CALIBRATION,
          "calibration needs at least two descriptors");
  double lo = raw_score(det, training_descriptors[0]);
  double hi = lo;
  for (const Descriptor& d : training_descriptors.subspan(1)) {
    double s = raw_score(det, d);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  require(hi > lo, PH_ERR_DEGENERATE_CALIBRATION, "degenerate calibration");
  det.score_min = lo;
  det.score_max = hi;
  return det;
}

double hinge_objective(std::span<const WeightedSample> samples, double regularization,
                       std::span<const double> weights, double bias) {
  double obj = 0.5 * regularization * dot(weights, weights);
  for (const WeightedSample& s : samples) {
    double margin = s.label * (dot(weights, s.descriptor) + bias);
    if (margin < 1.0) obj += s.weight * (1.0 - margin);
  }
  return obj;
}

void hinge_subgradient(std::span<const WeightedSample> samples, double regularization,
                       std::span<const double> weights, double bias,
                       std::span<double> grad_weights, double& grad_bias) {
  require(grad_weights.size() == weights.size(), PH_ERR_DIMENSION_MISMATCH,
          "gradient buffer length mismatch");
  for (size_t k = 0; k < weights.size(); ++k)
    grad_weights[k] = regularization * weights[k];
  grad_bias = 0.0;
  for (const WeightedSample& s : samples) {
    double margin = s.label * (dot(weights, s.descriptor) + bias);
    if (margin < 1.0) {
      double c = s.weight * s.label;
      for (size_t k = 0; k < weights.size(); ++k) grad_weights[k] -= c * s.descriptor[k];
      grad_bias -= c;
    }
  }
}

LinearDetector train_weighted(std::span<const WeightedSample> samples,
                              const TrainHyper& hyper) {
  require(hyper.regularization > 0.0, PH_ERR_INVALID_ARGUMENT,
          "regularization must be positive");
  require(hyper.epochs >= 1, PH_ERR_INVALID_ARGUMENT, "epochs must be >= 1");

  // Zero-weight samples contribute zero loss and zero subgradient; drop
  // them before anything seed-dependent so presence/absence is bit-neutral.
  std::vector<const WeightedSample*> active;
  active.reserve(samples.size());
  size_t dim = 0;
  bool has_pos = false, has_neg = false;
  for (const WeightedSample& s : samples) {
    require(s.weight >= 0.0 && std::isfinite(s.weight), PH_ERR_INVALID_ARGUMENT,
            "sample weight must be finite and non-negative");
    require(s.label == 1 || s.label == -1, PH_ERR_INVALID_ARGUMENT,
            "sample label must be +1 or -1");
    if (s.weight == 0.0) continue;
    if (dim == 0) dim = s.descriptor.size();
    require(s.descriptor.size() == dim, PH_ERR_DIMENSION_MISMATCH,
            "inconsistent descriptor lengths in training set");
    (s.label > 0 ? has_pos : has_neg) = true;
    active.push_back(&s);
  }
  require(has_pos && has_neg, PH_ERR_DEGENERATE_TRAINING_SET, "degenerate training set");

  std::vector<WeightedSample> effective;
  effective.reserve(active.size());
  for (const WeightedSample* s : active) effective.push_back(*s);

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<double> best_w = w;
  double best_b = b;
  double best_obj = hinge_objective(effective, hyper.regularization, w, b);

  std::vector<size_t> order(effective.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(derive_seed(hyper.seed, 0x5d37));

  long long t = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order.data(), order.size());
    for (size_t idx : order) {
      const WeightedSample& s = effective[idx];
      ++t;
      // eta_t * lambda_r == 1/t exactly; written that way so scaling all
      // weights by c alongside lambda_r by c reproduces the same iterates.
      double shrink = 1.0 - 1.0 / static_cast<double>(t);
      for (double& wk : w) wk *= shrink;
      double margin = s.label * (dot(w, s.descriptor) + b);
      if (margin < 1.0) {
        double step = s.weight / (hyper.regularization * static_cast<double>(t));
        double c = step * s.label;
        for (size_t k = 0; k < dim; ++k) w[k] += c * s.descriptor[k];
        b += c;
      }
    }
    double obj = hinge_objective(effective, hyper.regularization, w, b);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }

  LinearDetector det;
  det.weights = std::move(best_w);
  det.bias = best_b;

  std::vector<Descriptor> calibration_set;
  for (const WeightedSample& s : effective)
    if (hyper.calibrate_on_all_samples || s.label > 0)
      calibration_set.push_back(s.descriptor);
  return calibrate_range(std::move(det), calibration_set);
}

}  // namespace posehmm
