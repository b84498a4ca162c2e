#include "core/corpus_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace posehmm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), PH_ERR_IO, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  require(!in.bad(), PH_ERR_IO, "read failure on " + path.string());
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), PH_ERR_IO, "cannot write " + path.string());
  out << content;
  out.flush();
  require(out.good(), PH_ERR_IO, "write failure on " + path.string());
}

// Calls fn(line_number, json) for every non-empty line.
template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::string content = read_file(path);
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      fail(PH_ERR_PARSE,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    fn(line_no, record);
  }
}

template <typename T>
T get_field(const json& record, const char* key, const fs::path& path, int line_no) {
  if (!record.contains(key))
    fail(PH_ERR_PARSE, path.string() + ":" + std::to_string(line_no) +
                           ": missing field '" + key + "'");
  try {
    return record.at(key).get<T>();
  } catch (const json::exception&) {
    fail(PH_ERR_PARSE, path.string() + ":" + std::to_string(line_no) +
                           ": field '" + key + "' has the wrong type");
  }
}

void check_label(const std::string& label, const std::string& where) {
  require(!label.empty(), PH_ERR_VALIDATION, where + ": empty label");
  for (char c : label) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
              c == '.';
    require(ok, PH_ERR_VALIDATION,
            where + ": label '" + label + "' contains unsupported characters");
  }
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

std::string frame_file_name(const std::string& pattern, int index) {
  // Accept exactly one %0<width>d (or %d) conversion in the pattern.
  size_t pos = pattern.find('%');
  require(pos != std::string::npos && pattern.find('%', pos + 1) == std::string::npos,
          PH_ERR_PARSE, "frame pattern must contain exactly one % conversion");
  size_t end = pos + 1;
  while (end < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[end])))
    ++end;
  require(end < pattern.size() && pattern[end] == 'd', PH_ERR_PARSE,
          "frame pattern must use a %d conversion");
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern.c_str(), index);
  return buf;
}

}  // namespace

Frame read_pgm(const fs::path& path) {
  std::string content = read_file(path);
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < content.size()) {
      char c = content[pos];
      if (c == '#') {
        while (pos < content.size() && content[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < content.size() &&
           !std::isspace(static_cast<unsigned char>(content[pos])))
      ++pos;
    return content.substr(start, pos - start);
  };

  require(next_token() == "P5", PH_ERR_PARSE, path.string() + ": not a binary PGM");
  auto parse_int = [&](const char* what) {
    std::string tok = next_token();
    require(!tok.empty(), PH_ERR_PARSE, path.string() + ": truncated header");
    char* endp = nullptr;
    long v = std::strtol(tok.c_str(), &endp, 10);
    require(endp && *endp == '\0' && v > 0, PH_ERR_PARSE,
            path.string() + ": bad " + what);
    return static_cast<int>(v);
  };
  int width = parse_int("width");
  int height = parse_int("height");
  int maxval = parse_int("maxval");
  require(maxval == 255, PH_ERR_PARSE, path.string() + ": only maxval 255 supported");
  require(pos < content.size(), PH_ERR_PARSE, path.string() + ": truncated header");
  ++pos;  // single whitespace byte after maxval

  size_t need = static_cast<size_t>(width) * height;
  require(content.size() - pos >= need, PH_ERR_PARSE,
          path.string() + ": truncated pixel data");
  Frame frame;
  frame.width = width;
  frame.height = height;
  frame.pixels.resize(need);
  for (size_t i = 0; i < need; ++i)
    frame.pixels[i] = static_cast<unsigned char>(content[pos + i]) / 255.0;
  frame.validate();
  return frame;
}

void write_pgm(const fs::path& path, const Frame& frame) {
  frame.validate();
  std::string out;
  out.reserve(frame.pixels.size() + 32);
  out += "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
         "\n255\n";
  for (double px : frame.pixels) {
    long v = std::lround(std::clamp(px, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  write_file(path, out);
}

Corpus load_corpus(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    fail(PH_ERR_PARSE, manifest_path.string() + ": " + e.what());
  }
  CorpusManifest m;
  m.version = get_field<int>(manifest, "version", manifest_path, 1);
  require(m.version == 1, PH_ERR_VERSION,
          "unsupported corpus version " + std::to_string(m.version));
  m.frame_width = get_field<int>(manifest, "frame_width", manifest_path, 1);
  m.frame_height = get_field<int>(manifest, "frame_height", manifest_path, 1);
  m.frame_count = get_field<int>(manifest, "frame_count", manifest_path, 1);
  m.frame_pattern = get_field<std::string>(manifest, "frame_pattern", manifest_path, 1);
  m.tracks_file = get_field<std::string>(manifest, "tracks_file", manifest_path, 1);
  m.annotations_file =
      get_field<std::string>(manifest, "annotations_file", manifest_path, 1);
  require(m.frame_count >= 1, PH_ERR_VALIDATION, "corpus has no frames");

  fs::path base = manifest_path.parent_path();
  Corpus corpus;
  corpus.frames.resize(m.frame_count);
  for (int i = 0; i < m.frame_count; ++i) {
    Frame frame = read_pgm(base / frame_file_name(m.frame_pattern, i));
    require(frame.width == m.frame_width && frame.height == m.frame_height,
            PH_ERR_VALIDATION, "frame " + std::to_string(i) + " size differs from manifest");
    corpus.frames[i] = std::move(frame);
  }

  fs::path tracks_path = base / m.tracks_file;
  std::map<int, std::map<int, BoundingBox>> rows;
  for_each_jsonl(tracks_path, [&](int line_no, const json& record) {
    int track_id = get_field<int>(record, "track_id", tracks_path, line_no);
    int frame = get_field<int>(record, "frame", tracks_path, line_no);
    BoundingBox box{get_field<int>(record, "x", tracks_path, line_no),
                    get_field<int>(record, "y", tracks_path, line_no),
                    get_field<int>(record, "w", tracks_path, line_no),
                    get_field<int>(record, "h", tracks_path, line_no)};
    auto where = [&] { return tracks_path.string() + ":" + std::to_string(line_no); };
    require(frame >= 0 && frame < m.frame_count, PH_ERR_VALIDATION,
            where() + ": frame index outside corpus");
    require(box.w >= 8 && box.h >= 8, PH_ERR_VALIDATION,
            where() + ": box smaller than 8x8");
    require(box.x >= 0 && box.y >= 0 && box.x + box.w <= m.frame_width &&
                box.y + box.h <= m.frame_height,
            PH_ERR_VALIDATION, where() + ": box outside frame bounds");
    require(rows[track_id].emplace(frame, box).second, PH_ERR_VALIDATION,
            where() + ": duplicate (track, frame) row");
  });
  for (auto& [track_id, boxes] : rows) {
    Track track;
    track.track_id = track_id;
    track.start_frame = boxes.begin()->first;
    int expected = track.start_frame;
    for (auto& [frame, box] : boxes) {
      require(frame == expected, PH_ERR_VALIDATION,
              "track " + std::to_string(track_id) + " has a gap at frame " +
                  std::to_string(expected));
      track.boxes.push_back(box);
      ++expected;
    }
    corpus.tracks.push_back(std::move(track));
  }

  fs::path ann_path = base / m.annotations_file;
  for_each_jsonl(ann_path, [&](int line_no, const json& record) {
    EventInterval interval;
    interval.label = get_field<std::string>(record, "label", ann_path, line_no);
    interval.track_id = get_field<int>(record, "track_id", ann_path, line_no);
    interval.start = get_field<int>(record, "start", ann_path, line_no);
    interval.end = get_field<int>(record, "end", ann_path, line_no);
    interval.source = "annotation";
    auto where = [&] { return ann_path.string() + ":" + std::to_string(line_no); };
    check_label(interval.label, where());
    require(interval.end > interval.start, PH_ERR_VALIDATION,
            where() + ": empty interval");
    const Track* track = nullptr;
    for (const Track& t : corpus.tracks)
      if (t.track_id == interval.track_id) track = &t;
    require(track != nullptr, PH_ERR_VALIDATION,
            where() + ": unknown track " + std::to_string(interval.track_id));
    require(interval.start >= track->start_frame && interval.end <= track->end_frame(),
            PH_ERR_VALIDATION, where() + ": interval outside track frame range");
    corpus.annotations.push_back(std::move(interval));
  });
  return corpus;
}

void save_corpus(const fs::path& dir, const Corpus& corpus) {
  require(!corpus.frames.empty(), PH_ERR_INVALID_ARGUMENT, "corpus has no frames");
  fs::create_directories(dir / "frames");
  CorpusManifest m;
  m.frame_width = corpus.frames[0].width;
  m.frame_height = corpus.frames[0].height;
  m.frame_count = static_cast<int>(corpus.frames.size());

  for (int i = 0; i < m.frame_count; ++i)
    write_pgm(dir / frame_file_name(m.frame_pattern, i), corpus.frames[i]);

  std::string tracks;
  for (const Track& track : corpus.tracks) {
    for (int k = 0; k < static_cast<int>(track.boxes.size()); ++k) {
      const BoundingBox& box = track.boxes[k];
      json row{{"track_id", track.track_id}, {"frame", track.start_frame + k},
               {"x", box.x},                 {"y", box.y},
               {"w", box.w},                 {"h", box.h}};
      tracks += row.dump() + "\n";
    }
  }
  write_file(dir / m.tracks_file, tracks);

  save_annotations_jsonl(dir / m.annotations_file, corpus.annotations);

  json manifest{{"version", m.version},
                {"frame_width", m.frame_width},
                {"frame_height", m.frame_height},
                {"frame_count", m.frame_count},
                {"frame_pattern", m.frame_pattern},
                {"tracks_file", m.tracks_file},
                {"annotations_file", m.annotations_file}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void save_annotations_jsonl(const fs::path& path,
                            std::span<const EventInterval> annotations) {
  std::string out;
  for (const EventInterval& a : annotations) {
    json row{{"label", a.label}, {"track_id", a.track_id}, {"start", a.start},
             {"end", a.end}};
    out += row.dump() + "\n";
  }
  write_file(path, out);
}

void save_pose_labels(const fs::path& path, std::span<const PoseLabel> labels) {
  std::string out;
  for (const PoseLabel& label : labels) {
    json row{{"track_id", label.track_id}, {"frame", label.frame},
             {"pose_index", label.pose_index}};
    out += row.dump() + "\n";
  }
  write_file(path, out);
}

std::vector<PoseLabel> load_pose_labels(const fs::path& path) {
  std::vector<PoseLabel> labels;
  for_each_jsonl(path, [&](int line_no, const json& record) {
    labels.push_back({get_field<int>(record, "track_id", path, line_no),
                      get_field<int>(record, "frame", path, line_no),
                      get_field<int>(record, "pose_index", path, line_no)});
  });
  return labels;
}

void save_model(const HmmEventModel& model, const fs::path& path) {
  model.validate();
  std::ostringstream out;
  out << "posehmm-model v1\n";
  out << "label " << model.label << "\n";
  out << "states " << model.n_states() << "\n";
  out << "patch_size " << model.descriptor_config.patch_size << "\n";
  out << "cell_size " << model.descriptor_config.cell_size << "\n";
  out << "bins " << model.descriptor_config.bins << "\n";
  out << "threshold " << hex_double(model.threshold) << "\n";
  out << "seed " << model.meta.seed << "\n";
  out << "iterations " << model.meta.iterations << "\n";
  out << "loglik_trace " << model.meta.loglik_trace.size();
  for (double v : model.meta.loglik_trace) out << " " << hex_double(v);
  out << "\n";
  out << "transitions\n";
  for (int i = 0; i < model.n_states(); ++i) {
    double advance = i + 1 < model.n_states() ? model.trans.probs(i, i + 1) : 0.0;
    out << hex_double(model.trans.probs(i, i)) << " " << hex_double(advance) << " "
        << hex_double(model.trans.end_prob[i]) << "\n";
  }
  for (int i = 0; i < model.n_states(); ++i) {
    const LinearDetector& det = model.detectors[i];
    out << "detector " << i << "\n";
    out << "floor " << hex_double(det.floor) << "\n";
    out << "bias " << hex_double(det.bias) << "\n";
    out << "score_min " << hex_double(det.score_min) << "\n";
    out << "score_max " << hex_double(det.score_max) << "\n";
    out << "weights " << det.weights.size();
    for (double w : det.weights) out << " " << hex_double(w);
    out << "\n";
  }
  out << "end\n";
  write_file(path, out.str());
}

namespace {

class TokenReader {
 public:
  TokenReader(std::string content, std::string file)
      : in_(std::move(content)), file_(std::move(file)) {}

  std::string word(const char* what) {
    std::string tok;
    if (!(in_ >> tok)) fail(PH_ERR_PARSE, file_ + ": truncated model file, expected " +
                                              std::string(what));
    return tok;
  }

  void expect(const char* literal) {
    std::string tok = word(literal);
    if (tok != literal)
      fail(PH_ERR_PARSE, file_ + ": expected '" + literal + "', found '" + tok + "'");
  }

  long long integer(const char* what) {
    std::string tok = word(what);
    char* endp = nullptr;
    long long v = std::strtoll(tok.c_str(), &endp, 10);
    if (!endp || *endp != '\0')
      fail(PH_ERR_PARSE, file_ + ": corrupted integer field " + std::string(what));
    return v;
  }

  uint64_t unsigned_integer(const char* what) {
    std::string tok = word(what);
    char* endp = nullptr;
    uint64_t v = std::strtoull(tok.c_str(), &endp, 10);
    if (!endp || *endp != '\0')
      fail(PH_ERR_PARSE, file_ + ": corrupted integer field " + std::string(what));
    return v;
  }

  double real(const char* what) {
    std::string tok = word(what);
    char* endp = nullptr;
    double v = std::strtod(tok.c_str(), &endp);
    if (!endp || *endp != '\0')
      fail(PH_ERR_PARSE, file_ + ": corrupted numeric field " + std::string(what));
    return v;
  }

 private:
  std::istringstream in_;
  std::string file_;
};

}  // namespace

HmmEventModel load_model(const fs::path& path) {
  TokenReader reader(read_file(path), path.string());
  reader.expect("posehmm-model");
  std::string version = reader.word("version");
  require(version == "v1", PH_ERR_VERSION,
          path.string() + ": unsupported model version " + version);

  HmmEventModel model;
  reader.expect("label");
  model.label = reader.word("label value");
  reader.expect("states");
  int n = static_cast<int>(reader.integer("states"));
  require(n >= 2 && n <= 4096, PH_ERR_PARSE, path.string() + ": bad state count");
  reader.expect("patch_size");
  model.descriptor_config.patch_size = static_cast<int>(reader.integer("patch_size"));
  reader.expect("cell_size");
  model.descriptor_config.cell_size = static_cast<int>(reader.integer("cell_size"));
  reader.expect("bins");
  model.descriptor_config.bins = static_cast<int>(reader.integer("bins"));
  reader.expect("threshold");
  model.threshold = reader.real("threshold");
  reader.expect("seed");
  model.meta.seed = reader.unsigned_integer("seed");
  reader.expect("iterations");
  model.meta.iterations = static_cast<int>(reader.integer("iterations"));
  reader.expect("loglik_trace");
  long long trace_len = reader.integer("loglik_trace length");
  require(trace_len >= 0 && trace_len <= 1000000, PH_ERR_PARSE,
          path.string() + ": bad trace length");
  model.meta.loglik_trace.resize(trace_len);
  for (long long k = 0; k < trace_len; ++k)
    model.meta.loglik_trace[k] = reader.real("loglik_trace value");

  reader.expect("transitions");
  model.trans.n_states = n;
  model.trans.probs = Matrix(n, n);
  model.trans.end_prob.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double self = reader.real("self transition");
    double advance = reader.real("advance transition");
    double end = reader.real("end transition");
    model.trans.probs(i, i) = self;
    if (i + 1 < n) model.trans.probs(i, i + 1) = advance;
    model.trans.end_prob[i] = end;
  }

  model.detectors.resize(n);
  for (int i = 0; i < n; ++i) {
    reader.expect("detector");
    long long index = reader.integer("detector index");
    require(index == i, PH_ERR_PARSE, path.string() + ": detector blocks out of order");
    LinearDetector& det = model.detectors[i];
    reader.expect("floor");
    det.floor = reader.real("floor");
    reader.expect("bias");
    det.bias = reader.real("bias");
    reader.expect("score_min");
    det.score_min = reader.real("score_min");
    reader.expect("score_max");
    det.score_max = reader.real("score_max");
    reader.expect("weights");
    long long dim = reader.integer("weight count");
    require(dim == model.descriptor_config.length(), PH_ERR_PARSE,
            path.string() + ": weight count does not match descriptor config");
    det.weights.resize(dim);
    for (long long k = 0; k < dim; ++k) det.weights[k] = reader.real("weight");
  }
  reader.expect("end");
  model.validate();
  return model;
}

void save_detections_jsonl(const fs::path& path,
                           std::span<const CandidateDetection> detections) {
  std::string out;
  for (const CandidateDetection& det : detections) {
    json boxes = json::array();
    for (int k = 0; k < static_cast<int>(det.boxes.size()); ++k) {
      const BoundingBox& box = det.boxes[k];
      boxes.push_back(json{{"frame", det.start + k},
                           {"x", box.x},
                           {"y", box.y},
                           {"w", box.w},
                           {"h", box.h}});
    }
    json row{{"label", det.label},
             {"track_id", det.track_id},
             {"start", det.start},
             {"end", det.end},
             {"log_likelihood", det.log_likelihood},
             {"boxes", boxes}};
    out += row.dump() + "\n";
  }
  write_file(path, out);
}

std::vector<CandidateDetection> load_detections_jsonl(const fs::path& path) {
  std::vector<CandidateDetection> detections;
  for_each_jsonl(path, [&](int line_no, const json& record) {
    CandidateDetection det;
    det.label = get_field<std::string>(record, "label", path, line_no);
    det.track_id = get_field<int>(record, "track_id", path, line_no);
    det.start = get_field<int>(record, "start", path, line_no);
    det.end = get_field<int>(record, "end", path, line_no);
    det.log_likelihood = get_field<double>(record, "log_likelihood", path, line_no);
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    require(det.end > det.start, PH_ERR_VALIDATION, where() + ": empty interval");
    if (record.contains("boxes")) {
      const json& boxes = record.at("boxes");
      require(boxes.is_array(), PH_ERR_PARSE, where() + ": boxes must be an array");
      require(static_cast<int>(boxes.size()) == det.end - det.start, PH_ERR_VALIDATION,
              where() + ": box count does not match interval length");
      for (int k = 0; k < static_cast<int>(boxes.size()); ++k) {
        const json& b = boxes.at(k);
        require(get_field<int>(b, "frame", path, line_no) == det.start + k,
                PH_ERR_VALIDATION, where() + ": box frames not contiguous");
        det.boxes.push_back({get_field<int>(b, "x", path, line_no),
                             get_field<int>(b, "y", path, line_no),
                             get_field<int>(b, "w", path, line_no),
                             get_field<int>(b, "h", path, line_no)});
      }
    }
    detections.push_back(std::move(det));
  });
  return detections;
}

std::vector<ScoredInterval> load_intervals_jsonl(const fs::path& path) {
  std::vector<ScoredInterval> intervals;
  for_each_jsonl(path, [&](int line_no, const json& record) {
    ScoredInterval scored;
    scored.interval.label = get_field<std::string>(record, "label", path, line_no);
    scored.interval.start = get_field<int>(record, "start", path, line_no);
    scored.interval.end = get_field<int>(record, "end", path, line_no);
    if (record.contains("track_id"))
      scored.interval.track_id = get_field<int>(record, "track_id", path, line_no);
    if (record.contains("log_likelihood")) {
      scored.score = get_field<double>(record, "log_likelihood", path, line_no);
      scored.has_score = true;
    }
    require(scored.interval.end > scored.interval.start, PH_ERR_VALIDATION,
            path.string() + ":" + std::to_string(line_no) + ": empty interval");
    intervals.push_back(std::move(scored));
  });
  return intervals;
}

}  // namespace posehmm
