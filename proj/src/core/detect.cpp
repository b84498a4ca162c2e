#include "core/detect.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/features.hpp"
#include "core/logspace.hpp"
#include "core/parallel.hpp"

namespace posehmm {

std::vector<std::pair<int, int>> generate_candidate_intervals(int track_start,
                                                              int track_end) {
  require(track_end > track_start, PH_ERR_INVALID_ARGUMENT,
          "track frame range is empty");
  std::vector<std::pair<int, int>> intervals;
  for (int start = track_start; start < track_end; start += 10)
    for (int length = 10; length <= 50; length += 10)
      if (start + length <= track_end) intervals.emplace_back(start, length);
  return intervals;
}

namespace {

// Normalized detector scores for frames [0, T) of a descriptor span.
Matrix emission_matrix(const HmmEventModel& model,
                       std::span<const Descriptor> descriptors) {
  Matrix b(static_cast<int>(descriptors.size()), model.n_states());
  for (int t = 0; t < b.rows(); ++t)
    for (int i = 0; i < b.cols(); ++i)
      b(t, i) = normalized_score(model.detectors[i], descriptors[t]);
  return b;
}

double window_log_likelihood(const TransitionMatrix& trans, const Matrix& emissions,
                             int row_offset, int length) {
  Matrix window(length, emissions.cols());
  for (int t = 0; t < length; ++t)
    for (int i = 0; i < emissions.cols(); ++i)
      window(t, i) = emissions(row_offset + t, i);
  return sequence_log_likelihood(window, trans, initial_distribution(trans.n_states));
}

}  // namespace

double score_interval(const HmmEventModel& model,
                      std::span<const Descriptor> track_descriptors,
                      int track_start, int start, int length) {
  require(length >= 1, PH_ERR_INVALID_ARGUMENT, "interval length must be positive");
  int offset = start - track_start;
  require(offset >= 0 &&
              offset + length <= static_cast<int>(track_descriptors.size()),
          PH_ERR_INVALID_ARGUMENT, "descriptors missing for interval frames");
  Matrix emissions = emission_matrix(
      model, track_descriptors.subspan(static_cast<size_t>(offset),
                                       static_cast<size_t>(length)));
  return sequence_log_likelihood(emissions, model.trans,
                                 initial_distribution(model.n_states()));
}

double volume_overlap(const CandidateDetection& a, const CandidateDetection& b) {
  auto volume = [](const CandidateDetection& d) {
    long long v = 0;
    for (const BoundingBox& box : d.boxes) v += box.area();
    return v;
  };
  long long inter = 0;
  int lo = std::max(a.start, b.start);
  int hi = std::min(a.end, b.end);
  for (int t = lo; t < hi; ++t)
    inter += intersection_area(a.boxes[t - a.start], b.boxes[t - b.start]);
  long long uni = volume(a) + volume(b) - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::vector<CandidateDetection> non_max_suppress(
    std::vector<CandidateDetection> candidates, double overlap_threshold) {
  std::sort(candidates.begin(), candidates.end(),
            [](const CandidateDetection& a, const CandidateDetection& b) {
              if (a.log_likelihood != b.log_likelihood)
                return a.log_likelihood > b.log_likelihood;
              if (a.start != b.start) return a.start < b.start;
              return (a.end - a.start) > (b.end - b.start);
            });
  std::vector<CandidateDetection> survivors;
  for (CandidateDetection& cand : candidates) {
    bool keep = true;
    for (const CandidateDetection& kept : survivors) {
      if (volume_overlap(cand, kept) > overlap_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) survivors.push_back(std::move(cand));
  }
  return survivors;
}

std::map<int, std::vector<Descriptor>> compute_track_descriptors(
    std::span<const Track> tracks, std::span<const Frame> frames,
    const DescriptorConfig& config) {
  std::map<int, std::vector<Descriptor>> cache;
  struct Job {
    const Track* track;
    std::vector<Descriptor>* out;
    int index;
  };
  std::vector<Job> jobs;
  for (const Track& track : tracks) {
    require(track.start_frame >= 0 &&
                track.end_frame() <= static_cast<int>(frames.size()),
            PH_ERR_VALIDATION,
            "track " + std::to_string(track.track_id) + " exceeds frame range");
    auto& slot = cache[track.track_id];
    slot.resize(track.boxes.size());
    for (int k = 0; k < static_cast<int>(track.boxes.size()); ++k)
      jobs.push_back({&track, &slot, k});
  }
  parallel_for(jobs.size(), [&](size_t j) {
    const Job& job = jobs[j];
    int frame_index = job.track->start_frame + job.index;
    Patch patch = extract_patch(frames[frame_index], job.track->boxes[job.index],
                                config.patch_size);
    (*job.out)[job.index] = compute_descriptor(patch, config);
  });
  return cache;
}

std::vector<CandidateDetection> detect_events(std::span<const HmmEventModel> models,
                                              std::span<const Track> tracks,
                                              std::span<const Frame> frames) {
  if (tracks.empty() || models.empty()) return {};
  DescriptorConfig config = models[0].descriptor_config;
  for (const HmmEventModel& m : models)
    require(m.descriptor_config == config, PH_ERR_INVALID_ARGUMENT,
            "models disagree on descriptor configuration");
  auto descriptors = compute_track_descriptors(tracks, frames, config);
  return detect_events_cached(models, tracks, descriptors);
}

std::vector<CandidateDetection> detect_events_cached(
    std::span<const HmmEventModel> models, std::span<const Track> tracks,
    const std::map<int, std::vector<Descriptor>>& descriptors,
    const double* threshold_override) {
  struct Group {
    const HmmEventModel* model;
    const Track* track;
    std::vector<CandidateDetection> survivors;
  };
  for (const Track& track : tracks) {
    auto it = descriptors.find(track.track_id);
    require(it != descriptors.end() && it->second.size() == track.boxes.size(),
            PH_ERR_INVALID_ARGUMENT,
            "descriptor cache missing track " + std::to_string(track.track_id));
  }
  std::vector<Group> groups;
  for (const HmmEventModel& model : models) {
    model.validate();
    for (const Track& track : tracks) groups.push_back({&model, &track, {}});
  }

  parallel_for(groups.size(), [&](size_t g) {
    const HmmEventModel& model = *groups[g].model;
    const Track& track = *groups[g].track;
    const std::vector<Descriptor>& desc = descriptors.at(track.track_id);
    Matrix emissions = emission_matrix(model, desc);

    auto intervals = generate_candidate_intervals(track.start_frame, track.end_frame());
    std::vector<CandidateDetection> candidates(intervals.size());
    for (size_t k = 0; k < intervals.size(); ++k) {
      auto [start, length] = intervals[k];
      CandidateDetection& cand = candidates[k];
      cand.label = model.label;
      cand.track_id = track.track_id;
      cand.start = start;
      cand.end = start + length;
      cand.log_likelihood =
          window_log_likelihood(model.trans, emissions, start - track.start_frame, length);
      cand.boxes.assign(track.boxes.begin() + (start - track.start_frame),
                        track.boxes.begin() + (start - track.start_frame) + length);
    }

    // Windows no state path can traverse carry the log-zero sentinel;
    // they are not detections of anything.
    std::erase_if(candidates, [](const CandidateDetection& d) {
      return is_log_zero(d.log_likelihood);
    });

    double threshold = threshold_override ? *threshold_override : model.threshold;
    std::vector<CandidateDetection> survivors = non_max_suppress(std::move(candidates));
    std::erase_if(survivors, [threshold](const CandidateDetection& d) {
      return !(d.log_likelihood >= threshold);
    });
    groups[g].survivors = std::move(survivors);
  });

  std::vector<CandidateDetection> all;
  for (Group& group : groups)
    for (CandidateDetection& d : group.survivors) all.push_back(std::move(d));
  std::sort(all.begin(), all.end(),
            [](const CandidateDetection& a, const CandidateDetection& b) {
              if (a.label != b.label) return a.label < b.label;
              if (a.track_id != b.track_id) return a.track_id < b.track_id;
              if (a.start != b.start) return a.start < b.start;
              return a.end < b.end;
            });
  return all;
}

}  // namespace posehmm
