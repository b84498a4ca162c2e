#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/types.hpp"

namespace posehmm {

// In-memory image sequence plus the tracks and annotations over it.
struct Corpus {
  std::vector<Frame> frames;
  std::vector<Track> tracks;
  std::vector<EventInterval> annotations;
};

struct CorpusManifest {
  int version = 1;
  int frame_width = 0;
  int frame_height = 0;
  int frame_count = 0;
  std::string frame_pattern = "frames/frame_%06d.pgm";
  std::string tracks_file = "tracks.jsonl";
  std::string annotations_file = "annotations.jsonl";
};

// Binary P5 PGM, 8 bits, maxval 255. Intensities map to [0, 1] as k/255.
Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Frame& frame);

// Loads manifest + frames + tracks + annotations. File paths in the
// manifest are relative to its directory. Every structural violation
// (missing file, malformed record with its line number, box outside the
// frame, non-contiguous track) is a typed error; no partial corpus is
// returned.
Corpus load_corpus(const std::filesystem::path& manifest_path);

// Writes a full scene directory (manifest.json, frames/, tracks.jsonl,
// annotations.jsonl) in the formats load_corpus reads.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);

void save_pose_labels(const std::filesystem::path& path,
                      std::span<const PoseLabel> labels);
std::vector<PoseLabel> load_pose_labels(const std::filesystem::path& path);

// Versioned text model format. Floats are hexadecimal so a load(save(m))
// round trip reproduces every score bit-exactly.
void save_model(const HmmEventModel& model, const std::filesystem::path& path);
HmmEventModel load_model(const std::filesystem::path& path);

// Detections as JSON lines:
// {label, track_id, start, end, log_likelihood, boxes:[{frame,x,y,w,h},...]}
void save_detections_jsonl(const std::filesystem::path& path,
                           std::span<const CandidateDetection> detections);
std::vector<CandidateDetection> load_detections_jsonl(const std::filesystem::path& path);

// Annotations as JSON lines: {label, track_id, start, end}.
void save_annotations_jsonl(const std::filesystem::path& path,
                            std::span<const EventInterval> annotations);

// Interval records for evaluation. Accepts annotation files and detection
// files alike; `score` is log_likelihood when present.
struct ScoredInterval {
  EventInterval interval;
  double score = 0.0;
  bool has_score = false;
};
std::vector<ScoredInterval> load_intervals_jsonl(const std::filesystem::path& path);

}  // namespace posehmm
