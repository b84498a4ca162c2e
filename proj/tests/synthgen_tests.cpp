#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <set>

#include "core/corpus_io.hpp"
#include "core/error.hpp"
#include "core/synthgen.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace posehmm;

namespace {

SceneSpec small_spec(uint64_t seed) {
  SceneSpec spec = SceneSpec::defaults();
  spec.n_frames = 220;
  spec.frame_width = 96;
  spec.frame_height = 80;
  spec.track_box_size = 32;
  for (EventClassSpec& cls : spec.event_classes) cls.instances = 1;
  spec.min_duration = 10;
  spec.max_duration = 20;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("generate_scene: deterministic per seed") {
  Scene a = generate_scene(small_spec(9));
  Scene b = generate_scene(small_spec(9));
  REQUIRE(a.frames.size() == b.frames.size());
  for (size_t t = 0; t < a.frames.size(); ++t)
    CHECK(a.frames[t].pixels == b.frames[t].pixels);
  REQUIRE(a.truth.annotations.size() == b.truth.annotations.size());
  for (size_t k = 0; k < a.truth.annotations.size(); ++k) {
    CHECK(a.truth.annotations[k].start == b.truth.annotations[k].start);
    CHECK(a.truth.annotations[k].label == b.truth.annotations[k].label);
  }
}

TEST_CASE("generate_scene: different seeds render different frames") {
  Scene a = generate_scene(small_spec(9));
  Scene b = generate_scene(small_spec(10));
  bool any_differs = false;
  for (size_t t = 0; t < a.frames.size(); ++t)
    if (a.frames[t].pixels != b.frames[t].pixels) any_differs = true;
  CHECK(any_differs);
}

TEST_CASE("generate_scene: keyframes render the pose template exactly") {
  SceneSpec spec = SceneSpec::defaults();
  spec.n_frames = 120;
  spec.frame_width = 96;
  spec.frame_height = 80;
  spec.track_box_size = 32;
  spec.n_tracks = 1;
  spec.clutter_density = 0.0;
  spec.noise_amplitude = 0.0;
  spec.event_classes.resize(1);
  spec.event_classes[0].instances = 1;
  // Duration 11 with 3 poses puts keyframes exactly at offsets 0, 5, 10.
  spec.min_duration = 11;
  spec.max_duration = 11;
  spec.seed = 17;
  Scene scene = generate_scene(spec);

  REQUIRE(scene.truth.annotations.size() == 1);
  const EventInterval& event = scene.truth.annotations[0];
  const Track& track = scene.tracks[0];
  for (int pose = 0; pose < 3; ++pose) {
    int frame_index = event.start + 5 * pose;
    const BoundingBox& box = track.box_at(frame_index);
    auto expected =
        render_pose_template(spec.event_classes[0].poses[pose], box.w, box.h);
    const Frame& frame = scene.frames[frame_index];
    for (int y = 0; y < box.h; ++y)
      for (int x = 0; x < box.w; ++x)
        CHECK(frame.at(box.x + x, box.y + y) ==
              expected[static_cast<size_t>(y) * box.w + x]);
  }
}

TEST_CASE("generate_scene: default spec plants the requested event count") {
  SceneSpec spec = SceneSpec::defaults();
  spec.seed = 23;
  Scene scene = generate_scene(spec);
  CHECK(scene.truth.annotations.size() == 30);  // 3 classes x 10 instances
  std::map<std::string, int> per_label;
  for (const EventInterval& a : scene.truth.annotations) ++per_label[a.label];
  for (const EventClassSpec& cls : spec.event_classes)
    CHECK(per_label[cls.label] == cls.instances);
}

TEST_CASE("generate_scene: annotations stay inside tracks with legal durations") {
  SceneSpec spec = SceneSpec::defaults();
  spec.seed = 29;
  Scene scene = generate_scene(spec);
  for (const EventInterval& a : scene.truth.annotations) {
    const Track& track = scene.tracks[a.track_id];
    CHECK(a.start >= track.start_frame);
    CHECK(a.end <= track.end_frame());
    CHECK(a.end - a.start >= 10);
    CHECK(a.end - a.start <= 50);
  }
  // Events on one track never overlap in time.
  for (const EventInterval& a : scene.truth.annotations)
    for (const EventInterval& b : scene.truth.annotations)
      if (&a != &b && a.track_id == b.track_id)
        CHECK((a.end <= b.start || b.end <= a.start));
}

TEST_CASE("generate_scene: pose labels walk the pose sequence in order") {
  SceneSpec spec = small_spec(31);
  Scene scene = generate_scene(spec);
  std::map<std::pair<int, int>, int> labels;
  for (const PoseLabel& p : scene.truth.pose_labels)
    labels[{p.track_id, p.frame}] = p.pose_index;
  for (const EventInterval& a : scene.truth.annotations) {
    int prev = 0;
    for (int t = a.start; t < a.end; ++t) {
      auto it = labels.find({a.track_id, t});
      REQUIRE(it != labels.end());
      CHECK(it->second >= prev);  // left-right pose progression
      prev = it->second;
    }
    CHECK(labels.at({a.track_id, a.start}) == 0);
    CHECK(labels.at({a.track_id, a.end - 1}) == 2);
  }
}

TEST_CASE("generate_scene: infeasible packing is a typed error") {
  SceneSpec spec = small_spec(37);
  spec.n_frames = 40;  // three 10..20-frame events plus gaps cannot fit
  for (EventClassSpec& cls : spec.event_classes) cls.instances = 3;
  spec.n_tracks = 1;
  CHECK_THROWS_AS(generate_scene(spec), Error);
  try {
    generate_scene(spec);
  } catch (const Error& e) {
    CHECK(e.code() == PH_ERR_INFEASIBLE_PACKING);
  }
}

TEST_CASE("generate_scene: near-identical pose templates are rejected") {
  SceneSpec spec = small_spec(41);
  spec.event_classes.resize(1);
  spec.event_classes[0].poses[1] = spec.event_classes[0].poses[0];
  spec.event_classes[0].poses[1].angle_deg += 0.01;  // distinct but inseparable
  try {
    generate_scene(spec);
    FAIL("expected degenerate spec error");
  } catch (const Error& e) {
    CHECK(e.code() == PH_ERR_DEGENERATE_SPEC);
  }
}

TEST_CASE("generate_scene: repeating an identical template across classes is fine") {
  SceneSpec spec = small_spec(43);
  // The same literal pose may appear in two classes.
  spec.event_classes[1].poses[2] = spec.event_classes[0].poses[0];
  Scene scene = generate_scene(spec);
  CHECK(scene.frames.size() == static_cast<size_t>(spec.n_frames));
}

TEST_CASE("generate_corpus: writes loadable train/test scenes with distinct content") {
  test::ScratchDir dir("corpus");
  SceneSpec train = small_spec(51);
  SceneSpec test_spec = small_spec(52);
  generate_corpus(train, test_spec, dir.path());

  Corpus loaded_train = load_corpus(dir.path() / "train" / "manifest.json");
  Corpus loaded_test = load_corpus(dir.path() / "test" / "manifest.json");
  Scene regenerated = generate_scene(train);
  REQUIRE(loaded_train.frames.size() == regenerated.frames.size());
  for (size_t t = 0; t < regenerated.frames.size(); ++t)
    CHECK(loaded_train.frames[t].pixels == regenerated.frames[t].pixels);
  REQUIRE(loaded_train.tracks.size() == regenerated.tracks.size());
  for (size_t k = 0; k < regenerated.tracks.size(); ++k)
    CHECK(loaded_train.tracks[k].boxes == regenerated.tracks[k].boxes);
  REQUIRE(loaded_train.annotations.size() == regenerated.truth.annotations.size());

  bool any_differs = false;
  for (size_t t = 0; t < loaded_train.frames.size() && t < loaded_test.frames.size(); ++t)
    if (loaded_train.frames[t].pixels != loaded_test.frames[t].pixels)
      any_differs = true;
  CHECK(any_differs);

  auto labels = load_pose_labels(dir.path() / "train" / "pose_labels.jsonl");
  CHECK(labels.size() == regenerated.truth.pose_labels.size());
}

TEST_CASE("generate_corpus: identical seeds are rejected") {
  test::ScratchDir dir("corpus_same_seed");
  CHECK_THROWS_AS(generate_corpus(small_spec(5), small_spec(5), dir.path()), Error);
}

TEST_CASE("scene spec JSON: defaults, overrides, and 11-class specs") {
  SceneSpec spec = parse_scene_spec_json("{}");
  CHECK(spec.n_frames == SceneSpec::defaults().n_frames);
  CHECK(spec.event_classes.size() == 3);

  spec = parse_scene_spec_json(R"({"n_frames": 333, "noise_amplitude": 0.11})");
  CHECK(spec.n_frames == 333);
  CHECK(spec.noise_amplitude == 0.11);

  // As many classes as the filmed corpus this generator stands in for.
  std::string json = R"({"n_frames": 2600, "event_classes": [)";
  for (int k = 0; k < 11; ++k) {
    if (k) json += ",";
    json += R"({"label": "class)" + std::to_string(k) +
            R"(", "instances": 1, "poses": [{"shape": "bar", "angle_deg": )" +
            std::to_string(8.0 + 15.0 * k) +
            R"(}, {"shape": "rect", "aspect": )" +
            std::to_string(0.3 + 0.31 * k) + R"(}]})";
  }
  json += "]}";
  SceneSpec eleven = parse_scene_spec_json(json);
  CHECK(eleven.event_classes.size() == 11);
  eleven.seed = 71;
  Scene scene = generate_scene(eleven);
  CHECK(scene.truth.annotations.size() == 11);
  std::set<std::string> seen;
  for (const EventInterval& a : scene.truth.annotations) seen.insert(a.label);
  CHECK(seen.size() == 11);
}

TEST_CASE("scene spec JSON: malformed input is a parse error") {
  CHECK_THROWS_AS(parse_scene_spec_json("{nope"), Error);
  CHECK_THROWS_AS(parse_scene_spec_json(R"({"n_frames": "many"})"), Error);
  CHECK_THROWS_AS(parse_scene_spec_json(R"({"event_classes": [{"label": "x"}]})"), Error);
}
