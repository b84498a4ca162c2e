#include "core/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/corpus_io.hpp"
#include "core/error.hpp"
#include "core/features.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "json.hpp"

namespace posehmm {

namespace {

constexpr double kBackground = 0.12;
constexpr double kEdgeWidth = 0.03;  // soft edge in box-relative units

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Snap to the 8-bit grid used by the PGM files so that in-memory frames
// survive a save/load round trip bit-exactly.
double snap8(double x) { return std::lround(clamp01(x) * 255.0) / 255.0; }

double coverage(double signed_dist) {
  return clamp01(0.5 + signed_dist / kEdgeWidth);
}

// Foreground coverage of `pose` at box-relative coordinates (u, v).
double template_coverage(const PoseTemplate& pose, double u, double v) {
  double du = u - 0.5;
  double dv = v - 0.5;
  switch (pose.shape) {
    case PoseTemplate::Shape::Bar: {
      double theta = pose.angle_deg * M_PI / 180.0;
      double along = du * std::cos(theta) + dv * std::sin(theta);
      double perp = -du * std::sin(theta) + dv * std::cos(theta);
      return coverage(0.40 - std::abs(along)) * coverage(0.10 - std::abs(perp));
    }
    case PoseTemplate::Shape::Rect: {
      double half_w = 0.5 * std::min(0.85, std::sqrt(0.18 * pose.aspect));
      double half_h = 0.5 * std::min(0.85, std::sqrt(0.18 / pose.aspect));
      return coverage(half_w - std::abs(du)) * coverage(half_h - std::abs(dv));
    }
    case PoseTemplate::Shape::Disk:
      return coverage(pose.radius - std::sqrt(du * du + dv * dv));
  }
  return 0.0;
}

double template_intensity(const PoseTemplate& pose, double u, double v) {
  double c = template_coverage(pose, u, v);
  return kBackground + (pose.intensity - kBackground) * c;
}

// Per-frame object appearance on one track.
struct RenderState {
  bool idle = true;
  PoseTemplate a;
  PoseTemplate b;
  double blend = 0.0;  // 0 -> pure a, 1 -> pure b
};

struct ScheduledEvent {
  int class_index;
  int track_index;
  int start;
  int duration;
};

}  // namespace

PoseTemplate idle_pose() {
  PoseTemplate p;
  p.shape = PoseTemplate::Shape::Disk;
  p.radius = 0.12;
  p.intensity = 0.55;
  return p;
}

SceneSpec SceneSpec::defaults() {
  SceneSpec spec;
  auto bar = [](double angle) {
    PoseTemplate p;
    p.shape = PoseTemplate::Shape::Bar;
    p.angle_deg = angle;
    return p;
  };
  auto rect = [](double aspect) {
    PoseTemplate p;
    p.shape = PoseTemplate::Shape::Rect;
    p.aspect = aspect;
    return p;
  };
  spec.event_classes = {
      {"spin", {bar(0.0), bar(60.0), bar(120.0)}, 10},
      {"open", {rect(4.0), rect(1.0), rect(0.25)}, 10},
      {"wave", {bar(90.0), bar(30.0), bar(150.0)}, 10},
  };
  return spec;
}

void SceneSpec::validate() const {
  require(n_frames >= 1, PH_ERR_VALIDATION, "scene needs at least one frame");
  require(frame_width >= 16 && frame_height >= 16, PH_ERR_VALIDATION,
          "frame size too small");
  require(n_tracks >= 1, PH_ERR_VALIDATION, "scene needs at least one track");
  require(track_box_size >= 16, PH_ERR_VALIDATION, "track box smaller than 16px");
  require(track_box_size + 4 <= frame_width && track_box_size + 4 <= frame_height,
          PH_ERR_VALIDATION, "track box does not fit in frame");
  require(!event_classes.empty(), PH_ERR_VALIDATION, "no event classes");
  require(10 <= min_duration && min_duration <= max_duration && max_duration <= 50,
          PH_ERR_VALIDATION, "event durations must lie within [10, 50]");
  require(noise_amplitude >= 0.0 && noise_amplitude < 0.5, PH_ERR_VALIDATION,
          "noise amplitude out of range");
  require(clutter_density >= 0.0, PH_ERR_VALIDATION, "negative clutter density");
  std::set<std::string> labels;
  for (const EventClassSpec& cls : event_classes) {
    require(!cls.label.empty(), PH_ERR_VALIDATION, "event class label is empty");
    for (char c : cls.label)
      require(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
                  c == '.',
              PH_ERR_VALIDATION,
              "event class label '" + cls.label + "' contains unsupported characters");
    require(labels.insert(cls.label).second, PH_ERR_VALIDATION,
            "duplicate event class label: " + cls.label);
    require(cls.poses.size() >= 2, PH_ERR_VALIDATION,
            "event class " + cls.label + " needs at least 2 poses");
    require(static_cast<int>(cls.poses.size()) <= min_duration, PH_ERR_VALIDATION,
            "event class " + cls.label + " has more poses than the shortest duration");
    require(cls.instances >= 0, PH_ERR_VALIDATION, "negative instance count");
  }
}

std::vector<double> render_pose_template(const PoseTemplate& pose, int width, int height) {
  std::vector<double> pixels(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    double v = (y + 0.5) / height;
    for (int x = 0; x < width; ++x) {
      double u = (x + 0.5) / width;
      pixels[static_cast<size_t>(y) * width + x] = snap8(template_intensity(pose, u, v));
    }
  }
  return pixels;
}

namespace {

void check_pose_separability(const SceneSpec& spec) {
  std::vector<PoseTemplate> all{idle_pose()};
  for (const EventClassSpec& cls : spec.event_classes)
    for (const PoseTemplate& pose : cls.poses) all.push_back(pose);

  DescriptorConfig config;
  std::vector<Descriptor> descriptors(all.size());
  for (size_t k = 0; k < all.size(); ++k) {
    Patch patch;
    patch.size = config.patch_size;
    patch.pixels = render_pose_template(all[k], config.patch_size, config.patch_size);
    descriptors[k] = compute_descriptor(patch, config);
  }
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) {
      if (all[i] == all[j]) continue;  // literally the same template is fine
      double sq = 0.0;
      for (size_t k = 0; k < descriptors[i].size(); ++k) {
        double d = descriptors[i][k] - descriptors[j][k];
        sq += d * d;
      }
      require(std::sqrt(sq) > 0.1, PH_ERR_DEGENERATE_SPEC,
              "pose templates render nearly identical descriptors");
    }
  }
}

std::vector<ScheduledEvent> schedule_events(const SceneSpec& spec, Rng& rng) {
  std::vector<int> class_of_event;
  for (int c = 0; c < static_cast<int>(spec.event_classes.size()); ++c)
    for (int k = 0; k < spec.event_classes[c].instances; ++k) class_of_event.push_back(c);
  rng.shuffle(class_of_event.data(), class_of_event.size());

  std::vector<std::vector<int>> per_track(spec.n_tracks);
  for (size_t e = 0; e < class_of_event.size(); ++e)
    per_track[e % spec.n_tracks].push_back(class_of_event[e]);

  constexpr int kGapMin = 10;
  std::vector<ScheduledEvent> events;
  for (int track = 0; track < spec.n_tracks; ++track) {
    std::vector<int> durations;
    int total = 0;
    for (size_t k = 0; k < per_track[track].size(); ++k) {
      int d = static_cast<int>(rng.uniform_int(spec.min_duration, spec.max_duration));
      durations.push_back(d);
      total += d;
    }
    int count = static_cast<int>(per_track[track].size());
    long long slack = static_cast<long long>(spec.n_frames) - total -
                      static_cast<long long>(kGapMin) * (count + 1);
    require(slack >= 0, PH_ERR_INFEASIBLE_PACKING,
            "cannot place " + std::to_string(count) + " events in " +
                std::to_string(spec.n_frames) + " frames on track " +
                std::to_string(track));
    long long slack_left = slack;
    int cursor = 0;
    for (int k = 0; k < count; ++k) {
      long long extra = slack_left > 0 ? rng.uniform_int(0, slack_left) : 0;
      slack_left -= extra;
      int start = cursor + kGapMin + static_cast<int>(extra);
      events.push_back({per_track[track][k], track, start, durations[k]});
      cursor = start + durations[k];
    }
  }
  return events;
}

std::vector<std::vector<BoundingBox>> plan_track_paths(const SceneSpec& spec, Rng& rng) {
  std::vector<std::vector<BoundingBox>> paths(spec.n_tracks);
  const int bs = spec.track_box_size;
  const double cx0 = (spec.frame_width - bs) / 2.0;
  const double cy0 = (spec.frame_height - bs) / 2.0;
  const double max_ax = std::max(0.0, cx0 - 1.0);
  const double max_ay = std::max(0.0, cy0 - 1.0);
  for (int track = 0; track < spec.n_tracks; ++track) {
    double ax = max_ax * rng.uniform(0.3, 0.9);
    double ay = max_ay * rng.uniform(0.3, 0.9);
    double px = rng.uniform(180.0, 420.0);
    double py = rng.uniform(180.0, 420.0);
    double fx = rng.uniform(0.0, 2.0 * M_PI);
    double fy = rng.uniform(0.0, 2.0 * M_PI);
    paths[track].reserve(spec.n_frames);
    for (int t = 0; t < spec.n_frames; ++t) {
      int x = static_cast<int>(std::lround(cx0 + ax * std::sin(2.0 * M_PI * t / px + fx)));
      int y = static_cast<int>(std::lround(cy0 + ay * std::sin(2.0 * M_PI * t / py + fy)));
      x = std::clamp(x, 0, spec.frame_width - bs);
      y = std::clamp(y, 0, spec.frame_height - bs);
      paths[track].push_back({x, y, bs, bs});
    }
  }
  return paths;
}

struct ClutterShape {
  PoseTemplate pose;
  BoundingBox box;
};

std::vector<ClutterShape> plan_clutter(const SceneSpec& spec,
                                       const std::vector<std::vector<BoundingBox>>& paths,
                                       Rng& rng) {
  // Keep-out: the region each track ever sweeps through.
  std::vector<BoundingBox> keep_out;
  for (const auto& path : paths) {
    int x0 = spec.frame_width, y0 = spec.frame_height, x1 = 0, y1 = 0;
    for (const BoundingBox& b : path) {
      x0 = std::min(x0, b.x);
      y0 = std::min(y0, b.y);
      x1 = std::max(x1, b.x + b.w);
      y1 = std::max(y1, b.y + b.h);
    }
    keep_out.push_back({x0, y0, x1 - x0, y1 - y0});
  }

  int want = static_cast<int>(std::lround(
      spec.clutter_density * spec.frame_width * spec.frame_height / 10000.0));
  std::vector<ClutterShape> shapes;
  int attempts_left = want * 100;
  while (static_cast<int>(shapes.size()) < want && attempts_left-- > 0) {
    int size = static_cast<int>(rng.uniform_int(12, 28));
    if (size >= spec.frame_width || size >= spec.frame_height) continue;
    int x = static_cast<int>(rng.uniform_int(0, spec.frame_width - size));
    int y = static_cast<int>(rng.uniform_int(0, spec.frame_height - size));
    PoseTemplate pose;
    switch (rng.uniform_int(0, 2)) {
      case 0:
        pose.shape = PoseTemplate::Shape::Bar;
        pose.angle_deg = rng.uniform(0.0, 180.0);
        break;
      case 1:
        pose.shape = PoseTemplate::Shape::Rect;
        pose.aspect = rng.uniform(0.3, 3.0);
        break;
      default:
        pose.shape = PoseTemplate::Shape::Disk;
        pose.radius = rng.uniform(0.15, 0.4);
        break;
    }
    pose.intensity = rng.uniform(0.35, 0.8);
    BoundingBox box{x, y, size, size};
    bool clear = true;
    for (const BoundingBox& ko : keep_out)
      if (intersection_area(box, ko) > 0) clear = false;
    if (clear) shapes.push_back({pose, box});
  }
  return shapes;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  check_pose_separability(spec);

  Rng rng(derive_seed(spec.seed, 0xa11ce));
  auto paths = plan_track_paths(spec, rng);
  auto events = schedule_events(spec, rng);
  auto clutter = plan_clutter(spec, paths, rng);

  // Static canvas: background plus clutter, shared by all frames.
  std::vector<double> canvas(static_cast<size_t>(spec.frame_width) * spec.frame_height,
                             kBackground);
  for (const ClutterShape& shape : clutter) {
    for (int y = shape.box.y; y < shape.box.y + shape.box.h; ++y) {
      for (int x = shape.box.x; x < shape.box.x + shape.box.w; ++x) {
        double u = (x - shape.box.x + 0.5) / shape.box.w;
        double v = (y - shape.box.y + 0.5) / shape.box.h;
        double c = template_coverage(shape.pose, u, v);
        double& px = canvas[static_cast<size_t>(y) * spec.frame_width + x];
        px = std::max(px, kBackground + (shape.pose.intensity - kBackground) * c);
      }
    }
  }

  // Per-track, per-frame appearance.
  std::vector<std::vector<RenderState>> states(
      spec.n_tracks, std::vector<RenderState>(spec.n_frames));
  for (auto& track_states : states)
    for (RenderState& s : track_states) s.a = idle_pose();

  Scene scene;
  for (const ScheduledEvent& ev : events) {
    const EventClassSpec& cls = spec.event_classes[ev.class_index];
    const int k = static_cast<int>(cls.poses.size());
    for (int o = 0; o < ev.duration; ++o) {
      double c = ev.duration > 1
                     ? static_cast<double>(o) * (k - 1) / (ev.duration - 1)
                     : 0.0;
      int j = std::min(k - 2, static_cast<int>(std::floor(c)));
      RenderState& s = states[ev.track_index][ev.start + o];
      s.idle = false;
      s.a = cls.poses[j];
      s.b = cls.poses[j + 1];
      s.blend = c - j;
      scene.truth.pose_labels.push_back(
          {ev.track_index, ev.start + o, static_cast<int>(std::lround(c))});
    }
    scene.truth.annotations.push_back(
        {cls.label, ev.track_index, ev.start, ev.start + ev.duration, "synth"});
  }

  for (int track = 0; track < spec.n_tracks; ++track)
    scene.tracks.push_back({track, 0, paths[track]});

  scene.frames.assign(spec.n_frames, Frame{});
  parallel_for(static_cast<size_t>(spec.n_frames), [&](size_t t) {
    Frame& frame = scene.frames[t];
    frame.width = spec.frame_width;
    frame.height = spec.frame_height;
    frame.pixels = canvas;
    for (int track = 0; track < spec.n_tracks; ++track) {
      const BoundingBox& box = paths[track][t];
      const RenderState& s = states[track][t];
      for (int y = box.y; y < box.y + box.h; ++y) {
        for (int x = box.x; x < box.x + box.w; ++x) {
          double u = (x - box.x + 0.5) / box.w;
          double v = (y - box.y + 0.5) / box.h;
          double value = s.idle || s.blend == 0.0
                             ? template_intensity(s.a, u, v)
                             : (1.0 - s.blend) * template_intensity(s.a, u, v) +
                                   s.blend * template_intensity(s.b, u, v);
          frame.at(x, y) = value;
        }
      }
    }
    if (spec.noise_amplitude > 0.0) {
      Rng noise(derive_seed(spec.seed, 0xf00d0000ull + t));
      for (double& px : frame.pixels)
        px += noise.uniform(-spec.noise_amplitude, spec.noise_amplitude);
    }
    for (double& px : frame.pixels) px = snap8(px);
  });

  std::sort(scene.truth.annotations.begin(), scene.truth.annotations.end(),
            [](const EventInterval& a, const EventInterval& b) {
              if (a.track_id != b.track_id) return a.track_id < b.track_id;
              return a.start < b.start;
            });
  std::sort(scene.truth.pose_labels.begin(), scene.truth.pose_labels.end(),
            [](const PoseLabel& a, const PoseLabel& b) {
              if (a.track_id != b.track_id) return a.track_id < b.track_id;
              return a.frame < b.frame;
            });
  return scene;
}

void save_scene(const std::filesystem::path& dir, const Scene& scene) {
  Corpus corpus{scene.frames, scene.tracks, scene.truth.annotations};
  save_corpus(dir, corpus);
  save_pose_labels(dir / "pose_labels.jsonl", scene.truth.pose_labels);
}

void generate_corpus(const SceneSpec& train_spec, const SceneSpec& test_spec,
                     const std::filesystem::path& out_dir) {
  require(train_spec.seed != test_spec.seed, PH_ERR_INVALID_ARGUMENT,
          "train and test scenes must use distinct seeds");
  Scene train = generate_scene(train_spec);
  Scene test = generate_scene(test_spec);
  save_scene(out_dir / "train", train);
  save_scene(out_dir / "test", test);
}

SceneSpec parse_scene_spec_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(PH_ERR_PARSE, std::string("scene spec: ") + e.what());
  }
  require(doc.is_object(), PH_ERR_PARSE, "scene spec must be a JSON object");

  SceneSpec spec = SceneSpec::defaults();
  auto read = [&doc](const char* key, auto& out) {
    if (!doc.contains(key)) return;
    try {
      out = doc.at(key).get<std::decay_t<decltype(out)>>();
    } catch (const nlohmann::json::exception&) {
      fail(PH_ERR_PARSE, std::string("scene spec: field '") + key +
                             "' has the wrong type");
    }
  };
  read("n_frames", spec.n_frames);
  read("frame_width", spec.frame_width);
  read("frame_height", spec.frame_height);
  read("n_tracks", spec.n_tracks);
  read("track_box_size", spec.track_box_size);
  read("clutter_density", spec.clutter_density);
  read("noise_amplitude", spec.noise_amplitude);
  read("min_duration", spec.min_duration);
  read("max_duration", spec.max_duration);
  read("seed", spec.seed);

  if (doc.contains("event_classes")) {
    const nlohmann::json& classes = doc.at("event_classes");
    require(classes.is_array(), PH_ERR_PARSE, "scene spec: event_classes must be an array");
    spec.event_classes.clear();
    for (const nlohmann::json& cls : classes) {
      EventClassSpec out;
      require(cls.contains("label") && cls.at("label").is_string(), PH_ERR_PARSE,
              "scene spec: event class needs a string label");
      out.label = cls.at("label").get<std::string>();
      out.instances = cls.value("instances", 10);
      require(cls.contains("poses") && cls.at("poses").is_array(), PH_ERR_PARSE,
              "scene spec: event class " + out.label + " needs a poses array");
      for (const nlohmann::json& p : cls.at("poses")) {
        PoseTemplate pose;
        std::string shape = p.value("shape", std::string("bar"));
        if (shape == "bar") {
          pose.shape = PoseTemplate::Shape::Bar;
        } else if (shape == "rect") {
          pose.shape = PoseTemplate::Shape::Rect;
        } else if (shape == "disk") {
          pose.shape = PoseTemplate::Shape::Disk;
        } else {
          fail(PH_ERR_PARSE, "scene spec: unknown pose shape '" + shape + "'");
        }
        pose.angle_deg = p.value("angle_deg", pose.angle_deg);
        pose.aspect = p.value("aspect", pose.aspect);
        pose.radius = p.value("radius", pose.radius);
        pose.intensity = p.value("intensity", pose.intensity);
        require(pose.aspect > 0.0, PH_ERR_PARSE, "scene spec: aspect must be positive");
        require(pose.radius > 0.0 && pose.radius <= 0.5, PH_ERR_PARSE,
                "scene spec: radius must lie in (0, 0.5]");
        out.poses.push_back(pose);
      }
      spec.event_classes.push_back(std::move(out));
    }
  }
  spec.validate();
  return spec;
}

}  // namespace posehmm
