#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "core/detector.hpp"
#include "core/hmm.hpp"

namespace posehmm {

struct TrainingMeta {
  uint64_t seed = 0;
  int iterations = 0;
  std::vector<double> loglik_trace;  // total log-likelihood per EM iteration
};

// The trained artifact for one event class: bi-diagonal transitions, one
// calibrated detector per state, and the learned likelihood threshold.
struct HmmEventModel {
  std::string label;
  TransitionMatrix trans;
  std::vector<LinearDetector> detectors;
  double threshold = 0.0;
  DescriptorConfig descriptor_config;
  TrainingMeta meta;

  int n_states() const { return trans.n_states; }

  void validate() const {
    require(!label.empty(), PH_ERR_VALIDATION, "model label is empty");
    require(trans.n_states >= 2, PH_ERR_VALIDATION, "model needs at least 2 states");
    trans.validate();
    require(static_cast<int>(detectors.size()) == trans.n_states, PH_ERR_VALIDATION,
            "detector count does not match state count");
    for (const LinearDetector& det : detectors) {
      require(det.calibrated(), PH_ERR_VALIDATION, "model contains uncalibrated detector");
      require(det.floor > 0.0 && det.floor < 1.0, PH_ERR_VALIDATION,
              "detector floor outside (0, 1)");
      require(static_cast<int>(det.weights.size()) == descriptor_config.length(),
              PH_ERR_VALIDATION, "detector weight length does not match descriptor config");
      for (double w : det.weights)
        require(std::isfinite(w), PH_ERR_VALIDATION, "non-finite detector weight");
    }
    require(std::isfinite(threshold), PH_ERR_VALIDATION, "threshold not finite");
  }
};

}  // namespace posehmm
