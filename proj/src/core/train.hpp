#pragma once

#include <map>
#include <span>

#include "core/corpus_io.hpp"
#include "core/model.hpp"

namespace posehmm {

// One annotated event occurrence with its per-frame descriptors.
struct TrainingInstance {
  int track_id = 0;
  int event_start = 0;
  int event_end = 0;                    // [event_start, event_end)
  std::vector<Descriptor> descriptors;  // one per event frame

  int length() const { return event_end - event_start; }
};

struct TrainConfig {
  int n_states = 5;
  int max_iters = 20;
  double gamma_tolerance = 1e-3;  // stop when mean |gamma change| drops below
  TrainHyper detector;            // regularization 0.01, epochs 50
  int negatives_per_positive = 10;
  double threshold_overlap = 0.1;  // F1 operating point for the threshold
  DescriptorConfig descriptor_config;
  uint64_t seed = 0;
};

// Posterior tables for every instance; `xis` is empty right after
// initialization (the first M step derives hard counts from the one-hot
// gammas instead).
struct PosteriorSet {
  std::vector<Matrix> gammas;
  std::vector<std::vector<Matrix>> xis;
  double total_log_likelihood = 0.0;
};

// Partition each instance's frames into n_states contiguous segments
// (remainder frames go to the later segments) and return one-hot gammas.
std::vector<Matrix> initialize_assignments(std::span<const TrainingInstance> instances,
                                           int n_states);

// Retrains each state's detector on the event frames weighted by that
// state's gamma (weights below 1e-4 dropped) plus the shared negatives at
// weight 1, and re-estimates transitions from the pooled xi statistics.
// All detectors train with the same derived seed so identical weighted
// sample sets give identical detectors. Throws PH_ERR_STARVED_STATE when a
// state's total gamma mass falls below one positive-sample-equivalent.
HmmEventModel m_step(std::span<const TrainingInstance> instances,
                     const PosteriorSet& posteriors,
                     const TransitionMatrix& prev_trans,
                     std::span<const Descriptor> negatives, const TrainConfig& config,
                     const std::string& label, uint64_t detector_seed);

// Forward-backward over every instance with emissions from the model's
// calibrated detectors.
PosteriorSet e_step(std::span<const TrainingInstance> instances,
                    const HmmEventModel& model);

// Runs detection over the training tracks with the threshold disabled,
// then picks the candidate log-likelihood cutoff that maximizes F1
// against this label's annotations at `overlap_threshold` (ties resolved
// toward the higher cutoff). The returned threshold is always finite.
double learn_detection_threshold(
    const HmmEventModel& model, std::span<const Track> tracks,
    const std::map<int, std::vector<Descriptor>>& descriptors,
    std::span<const EventInterval> annotations, double overlap_threshold);

// Full pipeline: instances from the corpus annotations for `label`,
// shared negatives, initialize -> (m_step -> e_step) until the mean gamma
// change drops below tolerance or max_iters, then threshold learning.
// A pure function of (corpus, label, config).
HmmEventModel train_event_model(const Corpus& corpus, const std::string& label,
                                const TrainConfig& config);

// Test hook for the classical Baum-Welch guarantee: EM over transitions
// only, with fixed emission tables in place of detectors. Returns the
// total log-likelihood at each iteration's E step (non-decreasing).
std::vector<double> generative_em_trace(std::span<const Matrix> emission_tables,
                                        TransitionMatrix trans, int iterations);

}  // namespace posehmm
