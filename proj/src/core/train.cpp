#include "core/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "core/detect.hpp"
#include "core/eval.hpp"
#include "core/logspace.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace posehmm {

namespace {

constexpr double kGammaPrune = 1e-4;

Matrix instance_emissions(const TrainingInstance& instance, const HmmEventModel& model) {
  Matrix b(instance.length(), model.n_states());
  for (int t = 0; t < b.rows(); ++t)
    for (int i = 0; i < b.cols(); ++i)
      b(t, i) = normalized_score(model.detectors[i], instance.descriptors[t]);
  return b;
}

}  // namespace

std::vector<Matrix> initialize_assignments(std::span<const TrainingInstance> instances,
                                           int n_states) {
  require(n_states >= 1, PH_ERR_INVALID_ARGUMENT, "n_states must be positive");
  std::vector<Matrix> gammas;
  gammas.reserve(instances.size());
  for (const TrainingInstance& inst : instances) {
    const int T = inst.length();
    require(T >= n_states, PH_ERR_VALIDATION,
            "instance shorter than n_states (" + std::to_string(T) + " < " +
                std::to_string(n_states) + ")");
    require(inst.descriptors.size() == static_cast<size_t>(T), PH_ERR_VALIDATION,
            "instance descriptor count mismatch");
    Matrix gamma(T, n_states);
    int base = T / n_states;
    int rem = T % n_states;
    int t = 0;
    for (int s = 0; s < n_states; ++s) {
      int len = base + (s >= n_states - rem ? 1 : 0);
      for (int k = 0; k < len; ++k) gamma(t++, s) = 1.0;
    }
    gammas.push_back(std::move(gamma));
  }
  return gammas;
}

HmmEventModel m_step(std::span<const TrainingInstance> instances,
                     const PosteriorSet& posteriors, const TransitionMatrix& prev_trans,
                     std::span<const Descriptor> negatives, const TrainConfig& config,
                     const std::string& label, uint64_t detector_seed) {
  const int n = config.n_states;
  require(posteriors.gammas.size() == instances.size(), PH_ERR_DIMENSION_MISMATCH,
          "posterior set does not match instances");
  for (size_t k = 0; k < instances.size(); ++k) {
    require(posteriors.gammas[k].rows() == instances[k].length() &&
                posteriors.gammas[k].cols() == n,
            PH_ERR_DIMENSION_MISMATCH, "gamma table shape mismatch");
  }

  // Starved-state guard before any training work.
  for (int i = 0; i < n; ++i) {
    double mass = 0.0;
    for (const Matrix& gamma : posteriors.gammas)
      for (int t = 0; t < gamma.rows(); ++t) mass += gamma(t, i);
    require(mass >= 1.0, PH_ERR_STARVED_STATE,
            "starved state " + std::to_string(i) + " (gamma mass " +
                std::to_string(mass) + ")");
  }

  HmmEventModel model;
  model.label = label;
  model.descriptor_config = config.descriptor_config;
  model.detectors.resize(n);

  TrainHyper hyper = config.detector;
  hyper.seed = detector_seed;
  parallel_for(static_cast<size_t>(n), [&](size_t state) {
    std::vector<WeightedSample> samples;
    for (size_t k = 0; k < instances.size(); ++k) {
      const Matrix& gamma = posteriors.gammas[k];
      for (int t = 0; t < gamma.rows(); ++t) {
        double w = gamma(t, static_cast<int>(state));
        if (w >= kGammaPrune)
          samples.push_back({instances[k].descriptors[t], +1, w});
      }
    }
    for (const Descriptor& d : negatives) samples.push_back({d, -1, 1.0});
    model.detectors[state] = train_weighted(samples, hyper);
  });

  TransitionStats stats(n);
  if (posteriors.xis.empty()) {
    for (const Matrix& gamma : posteriors.gammas) stats.accumulate_one_hot(gamma);
  } else {
    require(posteriors.xis.size() == instances.size(), PH_ERR_DIMENSION_MISMATCH,
            "xi tables do not match instances");
    for (size_t k = 0; k < instances.size(); ++k)
      stats.accumulate(posteriors.gammas[k], posteriors.xis[k]);
  }
  model.trans = update_transitions(stats, prev_trans);
  return model;
}

PosteriorSet e_step(std::span<const TrainingInstance> instances,
                    const HmmEventModel& model) {
  PosteriorSet posts;
  posts.gammas.resize(instances.size());
  posts.xis.resize(instances.size());
  std::vector<double> logliks(instances.size(), 0.0);
  parallel_for(instances.size(), [&](size_t k) {
    Matrix emissions = instance_emissions(instances[k], model);
    Matrix log_alpha = forward(emissions, model.trans,
                               initial_distribution(model.n_states()));
    Matrix log_beta = backward(emissions, model.trans);
    PosteriorTables tables = posteriors(log_alpha, log_beta, emissions, model.trans);
    posts.gammas[k] = std::move(tables.gamma);
    posts.xis[k] = std::move(tables.xi);
    logliks[k] = tables.log_likelihood;
  });
  for (double ll : logliks) posts.total_log_likelihood += ll;
  return posts;
}

double learn_detection_threshold(
    const HmmEventModel& model, std::span<const Track> tracks,
    const std::map<int, std::vector<Descriptor>>& descriptors,
    std::span<const EventInterval> annotations, double overlap_threshold) {
  std::vector<EventInterval> truth;
  for (const EventInterval& a : annotations)
    if (a.label == model.label) truth.push_back(a);
  require(!truth.empty(), PH_ERR_INVALID_ARGUMENT,
          "no training annotations for label " + model.label);

  const double no_threshold = -std::numeric_limits<double>::infinity();
  std::vector<CandidateDetection> candidates = detect_events_cached(
      std::span<const HmmEventModel>(&model, 1), tracks, descriptors, &no_threshold);
  require(!candidates.empty(), PH_ERR_NO_CANDIDATES, "no candidates generated");

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const CandidateDetection& c : candidates) scores.push_back(c.log_likelihood);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  // Candidate cutoffs: below the minimum (keep everything), midpoints
  // between consecutive scores, above the maximum (keep nothing). The
  // extremes stand in for -inf/+inf while keeping the threshold finite.
  std::vector<double> cutoffs;
  cutoffs.push_back(scores.front() - 1.0);
  for (size_t k = 0; k + 1 < scores.size(); ++k)
    cutoffs.push_back(0.5 * (scores[k] + scores[k + 1]));
  cutoffs.push_back(scores.back() + 1.0);

  double best_cutoff = cutoffs.front();
  double best_f1 = -1.0;
  std::vector<EventInterval> retained;
  for (double cutoff : cutoffs) {
    retained.clear();
    for (const CandidateDetection& c : candidates)
      if (c.log_likelihood >= cutoff)
        retained.push_back({c.label, c.track_id, c.start, c.end, "detector"});
    double f1 = match_intervals(truth, retained, overlap_threshold).f1;
    if (f1 > best_f1 || (f1 == best_f1 && cutoff > best_cutoff)) {
      best_f1 = f1;
      best_cutoff = cutoff;
    }
  }
  return best_cutoff;
}

HmmEventModel train_event_model(const Corpus& corpus, const std::string& label,
                                const TrainConfig& config) {
  require(config.n_states >= 2, PH_ERR_INVALID_ARGUMENT, "n_states must be >= 2");
  require(config.max_iters >= 1, PH_ERR_INVALID_ARGUMENT, "max_iters must be >= 1");
  require(config.negatives_per_positive >= 1, PH_ERR_INVALID_ARGUMENT,
          "negatives_per_positive must be >= 1");

  auto cache = compute_track_descriptors(corpus.tracks, corpus.frames,
                                         config.descriptor_config);

  std::vector<TrainingInstance> instances;
  for (const EventInterval& a : corpus.annotations) {
    if (a.label != label) continue;
    auto it = cache.find(a.track_id);
    require(it != cache.end(), PH_ERR_VALIDATION,
            "annotation references unknown track " + std::to_string(a.track_id));
    const Track* track = nullptr;
    for (const Track& t : corpus.tracks)
      if (t.track_id == a.track_id) track = &t;
    TrainingInstance inst;
    inst.track_id = a.track_id;
    inst.event_start = a.start;
    inst.event_end = a.end;
    inst.descriptors.assign(
        it->second.begin() + (a.start - track->start_frame),
        it->second.begin() + (a.end - track->start_frame));
    instances.push_back(std::move(inst));
  }
  require(instances.size() >= 2, PH_ERR_INVALID_ARGUMENT,
          "training needs at least 2 instances of label " + label);

  int total_positive_frames = 0;
  for (const TrainingInstance& inst : instances) total_positive_frames += inst.length();
  int negative_count = config.negatives_per_positive * total_positive_frames;
  std::vector<Patch> negative_patches = sample_negative_patches(
      corpus.frames, negative_count, derive_seed(config.seed, 0x4e65),
      config.descriptor_config.patch_size);
  std::vector<Descriptor> negatives(negative_patches.size());
  parallel_for(negative_patches.size(), [&](size_t k) {
    negatives[k] = compute_descriptor(negative_patches[k], config.descriptor_config);
  });

  PosteriorSet posts;
  posts.gammas = initialize_assignments(instances, config.n_states);
  TransitionMatrix prev_trans = TransitionMatrix::uniform(config.n_states);

  HmmEventModel model;
  std::vector<double> trace;
  int iterations = 0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    model = m_step(instances, posts, prev_trans, negatives, config, label,
                   derive_seed(config.seed, 0xde7ec7 + static_cast<uint64_t>(iter)));
    PosteriorSet next = e_step(instances, model);
    trace.push_back(next.total_log_likelihood);

    double delta = 0.0;
    size_t cells = 0;
    for (size_t k = 0; k < instances.size(); ++k) {
      auto old_flat = posts.gammas[k].flat();
      auto new_flat = next.gammas[k].flat();
      for (size_t c = 0; c < old_flat.size(); ++c)
        delta += std::abs(new_flat[c] - old_flat[c]);
      cells += old_flat.size();
    }
    delta /= static_cast<double>(cells);

    std::fprintf(stderr, "[posehmm] train %s iter %d loglik %.6f gamma_delta %.6g\n",
                 label.c_str(), iter, next.total_log_likelihood, delta);
    prev_trans = model.trans;
    posts = std::move(next);
    iterations = iter;
    if (delta < config.gamma_tolerance) break;
  }

  model.meta.seed = config.seed;
  model.meta.iterations = iterations;
  model.meta.loglik_trace = std::move(trace);
  model.threshold = learn_detection_threshold(model, corpus.tracks, cache,
                                              corpus.annotations,
                                              config.threshold_overlap);
  std::fprintf(stderr, "[posehmm] train %s done: %d iterations, threshold %.6f\n",
               label.c_str(), iterations, model.threshold);
  model.validate();
  return model;
}

std::vector<double> generative_em_trace(std::span<const Matrix> emission_tables,
                                        TransitionMatrix trans, int iterations) {
  require(!emission_tables.empty(), PH_ERR_INVALID_ARGUMENT, "no emission tables");
  require(iterations >= 1, PH_ERR_INVALID_ARGUMENT, "iterations must be >= 1");
  const int n = trans.n_states;
  std::vector<double> pi = initial_distribution(n);

  std::vector<double> trace;
  trace.reserve(iterations);
  for (int iter = 0; iter < iterations; ++iter) {
    TransitionStats stats(n);
    double total = 0.0;
    for (const Matrix& emissions : emission_tables) {
      Matrix log_alpha = forward(emissions, trans, pi);
      Matrix log_beta = backward(emissions, trans);
      PosteriorTables tables = posteriors(log_alpha, log_beta, emissions, trans);
      stats.accumulate(tables);
      total += tables.log_likelihood;
    }
    trace.push_back(total);
    trans = update_transitions(stats, trans);
  }
  return trace;
}

}  // namespace posehmm
