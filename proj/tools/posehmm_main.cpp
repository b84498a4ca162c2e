// posehmm command-line tool: synth / train / detect / eval.
//
// Talks to the posehmm shared library exclusively through its public C API.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "posehmm/posehmm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

[[noreturn]] void die(ph_status status, const std::string& context) {
  std::fprintf(stderr, "posehmm: %s: %s", context.c_str(), ph_status_name(status));
  const char* detail = ph_last_error_message();
  if (detail && *detail) std::fprintf(stderr, " (%s)", detail);
  std::fprintf(stderr, "\n");
  std::exit(kExitRuntime);
}

void check(ph_status status, const std::string& context) {
  if (status != PH_OK) die(status, context);
}

// Optional JSON config file; command-line flags win on conflict. For each
// option the user did not pass, take a matching key from the config file.
void apply_config_file(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  std::ifstream in(config_path, std::ios::binary);
  if (!in.good()) {
    std::fprintf(stderr, "posehmm: cannot open config file %s\n", config_path.c_str());
    std::exit(kExitRuntime);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "posehmm: bad config file %s: %s\n", config_path.c_str(),
                 e.what());
    std::exit(kExitRuntime);
  }
  if (!doc.is_object()) {
    std::fprintf(stderr, "posehmm: config file %s must hold a JSON object\n",
                 config_path.c_str());
    std::exit(kExitRuntime);
  }
  for (auto& [key, value] : doc.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt || opt->count() > 0) continue;
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    try {
      opt->add_result(text);
      opt->run_callback();
    } catch (const CLI::Error&) {
      std::fprintf(stderr, "posehmm: config key '%s' has an unusable value\n",
                   key.c_str());
      std::exit(kExitRuntime);
    }
  }
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("POSEHMM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // library default: hardware concurrency
}

struct CorpusHandle {
  ph_corpus* ptr = nullptr;
  ~CorpusHandle() { ph_corpus_close(ptr); }
};

struct ModelHandle {
  ph_model* ptr = nullptr;
  ~ModelHandle() { ph_model_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event detection in tracked-object sequences with pose-sequence HMMs"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene directory");
  std::string synth_spec, synth_out, synth_config;
  uint64_t synth_seed = 0;
  synth->add_option("--spec", synth_spec, "Scene spec JSON file")->required();
  synth->add_option("--out", synth_out, "Output corpus directory")->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--config", synth_config, "JSON config file (flags win)");

  // --- train ---
  auto* train = app.add_subcommand("train", "Train event models from a corpus");
  std::string train_corpus, train_out, train_config_file;
  std::vector<std::string> train_labels;
  int train_states = 5, train_max_iters = 20, train_epochs = 50;
  int train_negatives = 10, train_threads = 0;
  double train_reg = 0.01, train_overlap = 0.1;
  uint64_t train_seed = 0;
  train->add_option("--corpus", train_corpus, "Corpus manifest.json")->required();
  train->add_option("--out", train_out, "Output directory for model files")->required();
  auto* train_seed_opt = train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--label", train_labels,
                    "Event label(s) to train (default: all labels in the corpus)");
  train->add_option("--states", train_states, "HMM states per model");
  train->add_option("--max-iters", train_max_iters, "EM iteration cap");
  train->add_option("--epochs", train_epochs, "Detector training epochs");
  train->add_option("--reg", train_reg, "Detector hinge regularization");
  train->add_option("--negatives-per-positive", train_negatives,
                    "Negative patches per positive frame");
  train->add_option("--threshold-overlap", train_overlap,
                    "Overlap threshold for F1 threshold learning");
  train->add_option("--threads", train_threads, "Worker thread cap");
  train->add_option("--config", train_config_file, "JSON config file (flags win)");

  // --- detect ---
  auto* detect = app.add_subcommand("detect", "Detect events in a corpus");
  std::string detect_corpus, detect_out, detect_config;
  std::vector<std::string> detect_models;
  int detect_threads = 0;
  detect->add_option("--corpus", detect_corpus, "Corpus manifest.json")->required();
  detect->add_option("--models", detect_models, "Trained model file(s)")
      ->required()
      ->expected(-1);
  detect->add_option("--out", detect_out, "Detections JSON-lines output")->required();
  detect->add_option("--threads", detect_threads, "Worker thread cap");
  detect->add_option("--config", detect_config, "JSON config file (flags win)");

  // --- eval ---
  auto* eval = app.add_subcommand("eval", "Score detections against annotations");
  std::string eval_truth, eval_pred, eval_out, eval_pr_out, eval_config;
  double eval_grid_start = 0.05, eval_grid_end = 0.95, eval_grid_step = 0.05;
  double eval_pr_overlap = 0.1;
  eval->add_option("--truth", eval_truth, "Truth intervals JSON-lines")->required();
  eval->add_option("--pred", eval_pred,
                   "Predicted intervals (detections or a second annotation set)")
      ->required();
  eval->add_option("--out", eval_out, "F1-curve CSV output")->required();
  eval->add_option("--pr-out", eval_pr_out,
                   "Optional PR-curve CSV (needs scored predictions)");
  eval->add_option("--pr-overlap", eval_pr_overlap, "Overlap threshold for the PR curve");
  eval->add_option("--grid-start", eval_grid_start, "First overlap threshold");
  eval->add_option("--grid-end", eval_grid_end, "Last overlap threshold");
  eval->add_option("--grid-step", eval_grid_step, "Overlap threshold step");
  eval->add_option("--config", eval_config, "JSON config file (flags win)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (synth->parsed()) {
    apply_config_file(synth, synth_config);
    if (synth_seed_opt->count() == 0) {
      std::fprintf(stderr, "posehmm synth: --seed is required (no hidden entropy)\n");
      return kExitUsage;
    }
    check(ph_synth_scene(synth_spec.c_str(), synth_out.c_str(), synth_seed),
          "synth " + synth_out);
    std::printf("wrote scene to %s\n", synth_out.c_str());
    return kExitOk;
  }

  if (train->parsed()) {
    apply_config_file(train, train_config_file);
    if (train_seed_opt->count() == 0) {
      std::fprintf(stderr, "posehmm train: --seed is required (no hidden entropy)\n");
      return kExitUsage;
    }
    ph_set_threads(resolve_threads(train_threads));

    CorpusHandle corpus;
    check(ph_corpus_open(train_corpus.c_str(), &corpus.ptr), "open " + train_corpus);

    std::vector<std::string> labels = train_labels;
    if (labels.empty()) {
      char** names = nullptr;
      size_t count = 0;
      check(ph_corpus_labels(corpus.ptr, &names, &count), "list corpus labels");
      for (size_t k = 0; k < count; ++k) labels.emplace_back(names[k]);
      ph_strings_free(names, count);
      if (labels.empty()) {
        std::fprintf(stderr, "posehmm train: corpus has no annotations\n");
        return kExitRuntime;
      }
    }

    ph_train_config config;
    ph_train_config_init(&config);
    config.n_states = train_states;
    config.max_iters = train_max_iters;
    config.detector_epochs = train_epochs;
    config.regularization = train_reg;
    config.negatives_per_positive = train_negatives;
    config.threshold_overlap = train_overlap;
    config.seed = train_seed;

    std::filesystem::create_directories(train_out);
    for (const std::string& label : labels) {
      ModelHandle model;
      check(ph_train(corpus.ptr, label.c_str(), &config, &model.ptr),
            "train " + label);
      std::string path = train_out + "/" + label + ".phmm";
      check(ph_model_save(model.ptr, path.c_str()), "save " + path);
      std::printf("wrote %s (states %d, threshold %.6f)\n", path.c_str(),
                  ph_model_states(model.ptr), ph_model_threshold(model.ptr));
    }
    return kExitOk;
  }

  if (detect->parsed()) {
    apply_config_file(detect, detect_config);
    ph_set_threads(resolve_threads(detect_threads));

    CorpusHandle corpus;
    check(ph_corpus_open(detect_corpus.c_str(), &corpus.ptr), "open " + detect_corpus);

    std::vector<ModelHandle> models(detect_models.size());
    std::vector<const ph_model*> model_ptrs;
    for (size_t k = 0; k < detect_models.size(); ++k) {
      check(ph_model_load(detect_models[k].c_str(), &models[k].ptr),
            "load " + detect_models[k]);
      model_ptrs.push_back(models[k].ptr);
    }

    ph_detections* dets = nullptr;
    check(ph_detect(model_ptrs.data(), model_ptrs.size(), corpus.ptr, &dets),
          "detect");
    check(ph_detections_save(dets, detect_out.c_str()), "save " + detect_out);
    std::printf("wrote %zu detections to %s\n", ph_detections_count(dets),
                detect_out.c_str());
    ph_detections_free(dets);
    return kExitOk;
  }

  if (eval->parsed()) {
    apply_config_file(eval, eval_config);
    ph_eval_report* report = nullptr;
    check(ph_eval_sweep_files(eval_truth.c_str(), eval_pred.c_str(), eval_grid_start,
                              eval_grid_end, eval_grid_step, &report),
          "eval " + eval_pred);
    check(ph_eval_report_write_csv(report, eval_out.c_str()), "write " + eval_out);
    for (size_t k = 0; k < ph_eval_report_rows(report); ++k) {
      ph_eval_row row;
      ph_eval_report_get(report, k, &row);
      std::printf(
          "overlap %.2f  tp %lld fp %lld fn %lld  precision %.6f recall %.6f f1 %.6f\n",
          row.threshold, row.tp, row.fp, row.fn, row.precision, row.recall, row.f1);
    }
    ph_eval_report_free(report);

    if (!eval_pr_out.empty()) {
      ph_eval_report* pr = nullptr;
      check(ph_eval_pr_files(eval_truth.c_str(), eval_pred.c_str(), eval_pr_overlap, &pr),
            "pr curve " + eval_pred);
      check(ph_eval_report_write_csv(pr, eval_pr_out.c_str()), "write " + eval_pr_out);
      std::printf("wrote PR curve (%zu points) to %s\n", ph_eval_report_rows(pr),
                  eval_pr_out.c_str());
      ph_eval_report_free(pr);
    }
    return kExitOk;
  }

  return kExitUsage;
}
