#include "posehmm/posehmm.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "core/corpus_io.hpp"
#include "core/detect.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/parallel.hpp"
#include "core/synthgen.hpp"
#include "core/train.hpp"

using namespace posehmm;

// Handle definitions. The C structs own plain C++ objects; every API call
// crosses the boundary through guarded() which converts exceptions into
// status codes plus a thread-local message.

struct ph_corpus {
  Corpus corpus;
};

struct ph_model {
  HmmEventModel model;
};

struct ph_detections {
  std::vector<CandidateDetection> detections;
};

struct ph_eval_report {
  bool is_pr = false;
  std::vector<ph_eval_row> rows;
};

namespace {

thread_local std::string t_last_error;

template <typename Fn>
ph_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return PH_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return e.code();
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return PH_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return PH_ERR_INTERNAL;
  }
}

ph_status invalid(const char* message) {
  t_last_error = message;
  return PH_ERR_INVALID_ARGUMENT;
}

ph_eval_row to_row(const MatchReport& r) {
  return {r.overlap_threshold, r.tp, r.fp, r.fn, r.precision, r.recall, r.f1};
}

std::vector<EventInterval> plain_intervals(const std::vector<ScoredInterval>& scored) {
  std::vector<EventInterval> out;
  out.reserve(scored.size());
  for (const ScoredInterval& s : scored) out.push_back(s.interval);
  return out;
}

}  // namespace

extern "C" {

const char* ph_status_name(ph_status status) {
  switch (status) {
    case PH_OK: return "ok";
    case PH_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PH_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case PH_ERR_EMPTY_SEQUENCE: return "empty sequence";
    case PH_ERR_IMPOSSIBLE_SEQUENCE: return "impossible sequence";
    case PH_ERR_TOO_LARGE: return "instance too large";
    case PH_ERR_DEGENERATE_TRAINING_SET: return "degenerate training set";
    case PH_ERR_DEGENERATE_CALIBRATION: return "degenerate calibration";
    case PH_ERR_UNCALIBRATED: return "uncalibrated detector";
    case PH_ERR_STARVED_STATE: return "starved state";
    case PH_ERR_NO_CANDIDATES: return "no candidates generated";
    case PH_ERR_INFEASIBLE_PACKING: return "infeasible packing";
    case PH_ERR_DEGENERATE_SPEC: return "degenerate scene spec";
    case PH_ERR_IO: return "i/o failure";
    case PH_ERR_PARSE: return "parse failure";
    case PH_ERR_VALIDATION: return "validation failure";
    case PH_ERR_VERSION: return "unsupported version";
    case PH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ph_last_error_message(void) { return t_last_error.c_str(); }

const char* ph_version(void) { return "posehmm 1.0.0"; }

void ph_set_threads(int n) { set_thread_count(n); }

int ph_threads(void) { return thread_count(); }

ph_status ph_synth_scene(const char* spec_json_path, const char* out_dir,
                         uint64_t seed) {
  if (!spec_json_path || !out_dir) return invalid("null path");
  return guarded([&] {
    std::ifstream in(spec_json_path, std::ios::binary);
    require(in.good(), PH_ERR_IO, std::string("cannot open ") + spec_json_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    SceneSpec spec = parse_scene_spec_json(text);
    spec.seed = seed;
    Scene scene = generate_scene(spec);
    save_scene(out_dir, scene);
  });
}

ph_status ph_corpus_open(const char* manifest_path, ph_corpus** out) {
  if (!manifest_path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ph_corpus>();
    handle->corpus = load_corpus(manifest_path);
    *out = handle.release();
  });
}

void ph_corpus_close(ph_corpus* corpus) { delete corpus; }

int ph_corpus_frame_count(const ph_corpus* corpus) {
  return corpus ? static_cast<int>(corpus->corpus.frames.size()) : 0;
}

int ph_corpus_track_count(const ph_corpus* corpus) {
  return corpus ? static_cast<int>(corpus->corpus.tracks.size()) : 0;
}

int ph_corpus_annotation_count(const ph_corpus* corpus) {
  return corpus ? static_cast<int>(corpus->corpus.annotations.size()) : 0;
}

ph_status ph_corpus_labels(const ph_corpus* corpus, char*** out_labels,
                           size_t* out_count) {
  if (!corpus || !out_labels || !out_count) return invalid("null argument");
  *out_labels = nullptr;
  *out_count = 0;
  return guarded([&] {
    std::set<std::string> labels;
    for (const EventInterval& a : corpus->corpus.annotations) labels.insert(a.label);
    char** strings = new char*[labels.size()];
    size_t k = 0;
    for (const std::string& label : labels) {
      strings[k] = new char[label.size() + 1];
      std::memcpy(strings[k], label.c_str(), label.size() + 1);
      ++k;
    }
    *out_labels = strings;
    *out_count = labels.size();
  });
}

void ph_strings_free(char** strings, size_t count) {
  if (!strings) return;
  for (size_t k = 0; k < count; ++k) delete[] strings[k];
  delete[] strings;
}

void ph_train_config_init(ph_train_config* config) {
  if (!config) return;
  config->n_states = 5;
  config->max_iters = 20;
  config->detector_epochs = 50;
  config->regularization = 0.01;
  config->negatives_per_positive = 10;
  config->threshold_overlap = 0.1;
  config->seed = 0;
}

ph_status ph_train(const ph_corpus* corpus, const char* label,
                   const ph_train_config* config, ph_model** out) {
  if (!corpus || !label || !config || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    TrainConfig cfg;
    cfg.n_states = config->n_states;
    cfg.max_iters = config->max_iters;
    cfg.detector.epochs = config->detector_epochs;
    cfg.detector.regularization = config->regularization;
    cfg.negatives_per_positive = config->negatives_per_positive;
    cfg.threshold_overlap = config->threshold_overlap;
    cfg.seed = config->seed;
    auto handle = std::make_unique<ph_model>();
    handle->model = train_event_model(corpus->corpus, label, cfg);
    *out = handle.release();
  });
}

ph_status ph_model_save(const ph_model* model, const char* path) {
  if (!model || !path) return invalid("null argument");
  return guarded([&] { save_model(model->model, path); });
}

ph_status ph_model_load(const char* path, ph_model** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ph_model>();
    handle->model = load_model(path);
    *out = handle.release();
  });
}

void ph_model_free(ph_model* model) { delete model; }

const char* ph_model_label(const ph_model* model) {
  return model ? model->model.label.c_str() : "";
}

int ph_model_states(const ph_model* model) {
  return model ? model->model.n_states() : 0;
}

double ph_model_threshold(const ph_model* model) {
  return model ? model->model.threshold : 0.0;
}

ph_status ph_detect(const ph_model* const* models, size_t n_models,
                    const ph_corpus* corpus, ph_detections** out) {
  if (!models || !corpus || !out) return invalid("null argument");
  if (n_models == 0) return invalid("empty model list");
  *out = nullptr;
  return guarded([&] {
    std::vector<HmmEventModel> list;
    list.reserve(n_models);
    for (size_t k = 0; k < n_models; ++k) {
      require(models[k] != nullptr, PH_ERR_INVALID_ARGUMENT, "null model handle");
      list.push_back(models[k]->model);
    }
    auto handle = std::make_unique<ph_detections>();
    handle->detections =
        detect_events(list, corpus->corpus.tracks, corpus->corpus.frames);
    *out = handle.release();
  });
}

ph_status ph_detections_save(const ph_detections* dets, const char* path) {
  if (!dets || !path) return invalid("null argument");
  return guarded([&] { save_detections_jsonl(path, dets->detections); });
}

ph_status ph_detections_load(const char* path, ph_detections** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ph_detections>();
    handle->detections = load_detections_jsonl(path);
    *out = handle.release();
  });
}

void ph_detections_free(ph_detections* dets) { delete dets; }

size_t ph_detections_count(const ph_detections* dets) {
  return dets ? dets->detections.size() : 0;
}

ph_status ph_detections_get(const ph_detections* dets, size_t index,
                            ph_detection_view* out) {
  if (!dets || !out) return invalid("null argument");
  if (index >= dets->detections.size()) return invalid("detection index out of range");
  const CandidateDetection& d = dets->detections[index];
  out->label = d.label.c_str();
  out->track_id = d.track_id;
  out->start = d.start;
  out->end = d.end;
  out->log_likelihood = d.log_likelihood;
  t_last_error.clear();
  return PH_OK;
}

ph_status ph_eval_sweep_files(const char* truth_jsonl, const char* pred_jsonl,
                              double grid_start, double grid_end, double grid_step,
                              ph_eval_report** out) {
  if (!truth_jsonl || !pred_jsonl || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    require(grid_step > 0.0, PH_ERR_INVALID_ARGUMENT, "grid step must be positive");
    require(grid_start <= grid_end, PH_ERR_INVALID_ARGUMENT,
            "grid start exceeds grid end");
    std::vector<double> grid;
    for (int k = 0;; ++k) {
      double g = grid_start + k * grid_step;
      if (g > grid_end + 1e-12) break;
      grid.push_back(g);
    }
    std::vector<EventInterval> truth =
        plain_intervals(load_intervals_jsonl(truth_jsonl));
    std::vector<EventInterval> pred = plain_intervals(load_intervals_jsonl(pred_jsonl));
    auto reports = sweep_overlap_thresholds(truth, pred, grid);
    auto handle = std::make_unique<ph_eval_report>();
    for (const MatchReport& r : reports) handle->rows.push_back(to_row(r));
    *out = handle.release();
  });
}

ph_status ph_eval_pr_files(const char* truth_jsonl, const char* detections_jsonl,
                           double overlap_threshold, ph_eval_report** out) {
  if (!truth_jsonl || !detections_jsonl || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    std::vector<EventInterval> truth =
        plain_intervals(load_intervals_jsonl(truth_jsonl));
    std::vector<ScoredInterval> scored = load_intervals_jsonl(detections_jsonl);
    std::vector<std::pair<EventInterval, double>> predictions;
    predictions.reserve(scored.size());
    for (const ScoredInterval& s : scored) {
      require(s.has_score, PH_ERR_INVALID_ARGUMENT,
              "predictions file lacks log_likelihood scores");
      predictions.emplace_back(s.interval, s.score);
    }
    auto points = pr_curve(predictions, truth, overlap_threshold);
    auto handle = std::make_unique<ph_eval_report>();
    handle->is_pr = true;
    for (const PrPoint& p : points)
      handle->rows.push_back({p.cutoff, 0, 0, 0, p.precision, p.recall, 0.0});
    *out = handle.release();
  });
}

size_t ph_eval_report_rows(const ph_eval_report* report) {
  return report ? report->rows.size() : 0;
}

ph_status ph_eval_report_get(const ph_eval_report* report, size_t row,
                             ph_eval_row* out) {
  if (!report || !out) return invalid("null argument");
  if (row >= report->rows.size()) return invalid("report row out of range");
  *out = report->rows[row];
  t_last_error.clear();
  return PH_OK;
}

ph_status ph_eval_report_write_csv(const ph_eval_report* report, const char* path) {
  if (!report || !path) return invalid("null argument");
  return guarded([&] {
    std::string out;
    char buf[160];
    if (report->is_pr) {
      out = "cutoff,precision,recall\n";
      for (const ph_eval_row& r : report->rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.6f,%.6f\n", r.threshold, r.precision,
                      r.recall);
        out += buf;
      }
    } else {
      out = "threshold,precision,recall,f1\n";
      for (const ph_eval_row& r : report->rows) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.6f,%.6f,%.6f\n", r.threshold,
                      r.precision, r.recall, r.f1);
        out += buf;
      }
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    require(file.good(), PH_ERR_IO, std::string("cannot write ") + path);
    file << out;
    file.flush();
    require(file.good(), PH_ERR_IO, std::string("write failure on ") + path);
  });
}

void ph_eval_report_free(ph_eval_report* report) { delete report; }

}  // extern "C"
