#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointcam/dataset.hpp"
#include "pointcam/metrics.hpp"
#include "pointcam/network.hpp"
#include "pointcam/synth.hpp"
#include "pointcam/ups.hpp"

namespace pointcam::pipeline {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 16;

  void validate() const;
};

/// Everything one training run depends on. Serialized next to the
/// checkpoint so evaluation can rebuild the exact model.
struct RunConfig {
  std::string task = "classification";  // or "segmentation"
  std::string dataset_dir;
  std::string split_file;
  std::string out_dir;
  std::uint64_t seed = 0;

  network::BackboneConfig backbone;  // num_known_classes 0 = fill from split
  network::UpeConfig upe;
  ups::UpsParams ups;
  bool ups_enabled = true;
  OptimizerConfig optimizer;
  // Segmentation clouds are cut to this many random points per epoch;
  // 0 uses each cloud whole. Classification always trains on whole clouds.
  int crop_points = 0;

  void validate() const;
};

/// JSON round-trip; absent keys keep their defaults.
RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& config);

/// CLI names for the simulator generators: cutmix, rotation, translation,
/// scaling, noise, none.
ups::Generator generator_from_name(const std::string& name);
std::string generator_name(ups::Generator generator);

/// Writes a synthetic dataset (manifest + cloud files + split.json) into
/// out_dir. Existing non-empty out_dir is refused unless force.
void cmd_synth(const data::SynthSpec& spec, const data::SplitConfig& split,
               const std::string& out_dir, std::uint64_t seed, bool force);

/// One simulator pass over a single labeled cloud file: writes
/// augmented.txt (coords + post-mix labels) and mask.txt (selected rows).
void cmd_augment(const std::string& cloud_path, const ups::UpsParams& params,
                 int unknown_label, std::uint64_t seed, const std::string& out_dir,
                 bool force);

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  std::string config_path;
  double final_task_loss = 0.0;
  double final_train_accuracy = 0.0;
};

/// Full training run: per-epoch mix augmentation with per-sample derived
/// seeds, Adam updates, CSV loss log, final checkpoint + config echo in
/// config.out_dir. Deterministic to the byte for a given (config, seed);
/// wall-clock timestamps go only to run_meta.json.
TrainResult cmd_train(const RunConfig& config, bool force);

struct EvalResult {
  metrics::MetricsReport report;
  std::vector<metrics::ScoreRecord> scores;
  std::string scores_path;
  std::string metrics_path;
  std::string histogram_path;
};

/// Scores every evaluation unit (per sample for classification, per point
/// for segmentation) with score_fn in {msp, maxlogit, upe}, then writes
/// scores.csv, metrics.json, and histogram.svg. The model directory must
/// hold cmd_train's config.json and checkpoint.bin. dataset_dir/split_file
/// override the trained paths when non-empty. Without unknown units the
/// open-set metrics are omitted with a warning on stderr.
EvalResult cmd_eval(const std::string& model_dir, const std::string& score_fn,
                    const std::string& out_dir, bool force,
                    const std::string& dataset_dir = "",
                    const std::string& split_file = "");

/// Recomputes the open-set metrics of an existing scores.csv and writes
/// metrics.json into out_dir.
metrics::MetricsReport cmd_metrics(const std::string& scores_path,
                                   const std::string& out_dir, bool force);

}  // namespace pointcam::pipeline
