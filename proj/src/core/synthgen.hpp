#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace posehmm {

// Parametric shape rendered inside a track box: the visual identity of one
// HMM-discoverable pose.
struct PoseTemplate {
  enum class Shape { Bar, Rect, Disk };
  Shape shape = Shape::Bar;
  double angle_deg = 0.0;   // Bar: orientation of the long axis
  double aspect = 1.0;      // Rect: width / height
  double radius = 0.12;     // Disk: radius in box-relative units
  double intensity = 0.95;  // peak foreground intensity

  bool operator==(const PoseTemplate&) const = default;
};

struct EventClassSpec {
  std::string label;
  std::vector<PoseTemplate> poses;  // ordered, >= 2
  int instances = 0;                // events to plant per scene
};

struct SceneSpec {
  int n_frames = 1200;
  int frame_width = 160;
  int frame_height = 120;
  int n_tracks = 2;
  int track_box_size = 48;
  std::vector<EventClassSpec> event_classes;
  double clutter_density = 1.0;  // static shapes per 10000 px of frame area
  double noise_amplitude = 0.05;
  int min_duration = 10;  // event durations drawn uniformly from this range
  int max_duration = 50;
  uint64_t seed = 0;

  // Three 3-pose classes, 10 instances each: ~30 events over 2 tracks.
  static SceneSpec defaults();
  void validate() const;
};

struct GroundTruth {
  std::vector<EventInterval> annotations;
  std::vector<PoseLabel> pose_labels;  // event frames only
};

struct Scene {
  std::vector<Frame> frames;
  std::vector<Track> tracks;
  GroundTruth truth;
};

// Writes one scene directory: manifest.json, frames/, tracks.jsonl,
// annotations.jsonl, pose_labels.jsonl.
void save_scene(const std::filesystem::path& dir, const Scene& scene);

// Exact rendering of one template at an arbitrary raster size, snapped to
// the same 8-bit grid the scene frames use. The scene renderer produces
// these values verbatim inside the track box at pose keyframes.
std::vector<double> render_pose_template(const PoseTemplate& pose, int width, int height);

// The neutral pose shown outside events.
PoseTemplate idle_pose();

// Deterministic function of the spec. Objects cross-fade linearly between
// pose keyframes over each event; non-event frames show the idle pose.
// Throws PH_ERR_INFEASIBLE_PACKING when the events cannot be scheduled and
// PH_ERR_DEGENERATE_SPEC when two distinct pose templates render
// descriptors closer than L2 0.1.
Scene generate_scene(const SceneSpec& spec);

// Writes train/ and test/ scene directories under out_dir in the corpus
// file formats plus the pose_labels.jsonl sidecar. Seeds must differ.
void generate_corpus(const SceneSpec& train_spec, const SceneSpec& test_spec,
                     const std::filesystem::path& out_dir);

// Scene spec from its JSON representation; missing fields take defaults.
SceneSpec parse_scene_spec_json(const std::string& json_text);

}  // namespace posehmm
