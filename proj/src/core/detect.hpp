#pragma once

#include <map>
#include <span>

#include "core/model.hpp"
#include "core/types.hpp"

namespace posehmm {

// (volume) IoU threshold analogous to the standard 2D 0.5 box criterion.
inline constexpr double kNmsOverlapThreshold = 0.35355339059327373;  // 0.5^1.5

// Candidate windows on a track: starts quantized to 10 frames from the
// track start, lengths 10..50 in steps of 10, half-open [start, start+len),
// kept only when they fit inside the track.
std::vector<std::pair<int, int>> generate_candidate_intervals(int track_start,
                                                              int track_end);

// End-state-enforced HMM log-likelihood of the window [start, start+length)
// given per-frame descriptors for the whole track. Returns the log-zero
// sentinel when no state path fits (length < n_states).
double score_interval(const HmmEventModel& model,
                      std::span<const Descriptor> track_descriptors,
                      int track_start, int start, int length);

// Spatio-temporal intersection over union: per-frame box areas summed over
// each interval; the intersection sums per-frame box intersections over
// the shared frames. 0 when temporally disjoint.
double volume_overlap(const CandidateDetection& a, const CandidateDetection& b);

// Greedy NMS: descending log-likelihood (ties by earlier start, then
// longer interval), accepting a candidate iff its volume overlap with
// every accepted one is <= the threshold.
std::vector<CandidateDetection> non_max_suppress(
    std::vector<CandidateDetection> candidates,
    double overlap_threshold = kNmsOverlapThreshold);

// Per-frame descriptors for every track, keyed by track id. Boxes are
// taken from the track; frames must cover the track's frame range.
std::map<int, std::vector<Descriptor>> compute_track_descriptors(
    std::span<const Track> tracks, std::span<const Frame> frames,
    const DescriptorConfig& config);

// Full pipeline for every (model, track) pair: candidates -> HMM scoring
// -> per-pair NMS -> threshold filter. Output is ordered by (label,
// track, start, end). Suppression never crosses models or tracks.
std::vector<CandidateDetection> detect_events(
    std::span<const HmmEventModel> models, std::span<const Track> tracks,
    std::span<const Frame> frames);

// Same, reusing precomputed descriptors and an optional threshold override
// (used while the threshold is being learned).
std::vector<CandidateDetection> detect_events_cached(
    std::span<const HmmEventModel> models, std::span<const Track> tracks,
    const std::map<int, std::vector<Descriptor>>& descriptors,
    const double* threshold_override = nullptr);

}  // namespace posehmm
