/* posehmm: event detection in tracked-object sequences with pose-sequence HMMs.
 *
 * C API for the posehmm shared library. All functions are thread-safe unless
 * noted. Functions returning ph_status set a thread-local error message
 * retrievable via ph_last_error_message().
 */
#ifndef POSEHMM_H
#define POSEHMM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ph_status {
  PH_OK = 0,
  PH_ERR_INVALID_ARGUMENT = 1,
  PH_ERR_DIMENSION_MISMATCH = 2,
  PH_ERR_EMPTY_SEQUENCE = 3,
  PH_ERR_IMPOSSIBLE_SEQUENCE = 4,
  PH_ERR_TOO_LARGE = 5,
  PH_ERR_DEGENERATE_TRAINING_SET = 6,
  PH_ERR_DEGENERATE_CALIBRATION = 7,
  PH_ERR_UNCALIBRATED = 8,
  PH_ERR_STARVED_STATE = 9,
  PH_ERR_NO_CANDIDATES = 10,
  PH_ERR_INFEASIBLE_PACKING = 11,
  PH_ERR_DEGENERATE_SPEC = 12,
  PH_ERR_IO = 13,
  PH_ERR_PARSE = 14,
  PH_ERR_VALIDATION = 15,
  PH_ERR_VERSION = 16,
  PH_ERR_INTERNAL = 17
} ph_status;

/* Stable name for a status code, e.g. "degenerate calibration". */
const char* ph_status_name(ph_status status);

/* Detail message from the most recent failing call on this thread.
 * Empty string if the last call succeeded. */
const char* ph_last_error_message(void);

const char* ph_version(void);

/* Worker-thread cap for internal parallelism. 0 restores the default
 * (hardware concurrency). Results are identical for every setting. */
void ph_set_threads(int n);
int ph_threads(void);

/* ---- opaque handles ---- */

typedef struct ph_corpus ph_corpus;         /* frames + tracks + annotations */
typedef struct ph_model ph_model;           /* one trained event model */
typedef struct ph_detections ph_detections; /* detection result set */
typedef struct ph_eval_report ph_eval_report;

/* ---- synthetic corpus generation ---- */

/* Render one synthetic scene described by a JSON spec file into out_dir
 * (manifest.json, frames/, tracks.jsonl, annotations.jsonl,
 * pose_labels.jsonl). `seed` overrides any seed in the spec file. */
ph_status ph_synth_scene(const char* spec_json_path, const char* out_dir,
                         uint64_t seed);

/* ---- corpus ---- */

ph_status ph_corpus_open(const char* manifest_path, ph_corpus** out);
void ph_corpus_close(ph_corpus* corpus);
int ph_corpus_frame_count(const ph_corpus* corpus);
int ph_corpus_track_count(const ph_corpus* corpus);
int ph_corpus_annotation_count(const ph_corpus* corpus);
/* Distinct annotation labels, sorted. Free with ph_strings_free. */
ph_status ph_corpus_labels(const ph_corpus* corpus, char*** out_labels,
                           size_t* out_count);
void ph_strings_free(char** strings, size_t count);

/* ---- training ---- */

typedef struct ph_train_config {
  int n_states;                /* default 5 */
  int max_iters;               /* default 20 */
  int detector_epochs;         /* default 50 */
  double regularization;       /* default 0.01 */
  int negatives_per_positive;  /* default 10 */
  double threshold_overlap;    /* default 0.1 */
  uint64_t seed;               /* no default; caller must set */
} ph_train_config;

/* Fill `config` with defaults (seed = 0). */
void ph_train_config_init(ph_train_config* config);

ph_status ph_train(const ph_corpus* corpus, const char* label,
                   const ph_train_config* config, ph_model** out);

/* ---- models ---- */

ph_status ph_model_save(const ph_model* model, const char* path);
ph_status ph_model_load(const char* path, ph_model** out);
void ph_model_free(ph_model* model);
const char* ph_model_label(const ph_model* model);
int ph_model_states(const ph_model* model);
double ph_model_threshold(const ph_model* model);

/* ---- detection ---- */

ph_status ph_detect(const ph_model* const* models, size_t n_models,
                    const ph_corpus* corpus, ph_detections** out);
ph_status ph_detections_save(const ph_detections* dets, const char* path);
ph_status ph_detections_load(const char* path, ph_detections** out);
void ph_detections_free(ph_detections* dets);
size_t ph_detections_count(const ph_detections* dets);

typedef struct ph_detection_view {
  const char* label; /* valid while the ph_detections handle lives */
  int track_id;
  int start; /* [start, end) frame interval */
  int end;
  double log_likelihood;
} ph_detection_view;

ph_status ph_detections_get(const ph_detections* dets, size_t index,
                            ph_detection_view* out);

/* ---- evaluation ---- */

typedef struct ph_eval_row {
  double threshold; /* overlap threshold, or score cutoff for PR rows */
  long long tp, fp, fn;
  double precision, recall, f1;
} ph_eval_row;

/* F1 vs overlap threshold over [grid_start, grid_end] in grid_step
 * increments. Both files are JSON lines of intervals; detections files
 * (with log_likelihood) are accepted as either side. */
ph_status ph_eval_sweep_files(const char* truth_jsonl, const char* pred_jsonl,
                              double grid_start, double grid_end,
                              double grid_step, ph_eval_report** out);

/* Precision-recall curve at a fixed overlap threshold. The predictions
 * file must carry log_likelihood scores. */
ph_status ph_eval_pr_files(const char* truth_jsonl,
                           const char* detections_jsonl,
                           double overlap_threshold, ph_eval_report** out);

size_t ph_eval_report_rows(const ph_eval_report* report);
ph_status ph_eval_report_get(const ph_eval_report* report, size_t row,
                             ph_eval_row* out);
/* Header "threshold,precision,recall,f1" for sweep reports,
 * "cutoff,precision,recall" for PR reports. */
ph_status ph_eval_report_write_csv(const ph_eval_report* report,
                                   const char* path);
void ph_eval_report_free(ph_eval_report* report);

#ifdef __cplusplus
}
#endif

#endif /* POSEHMM_H */
