// Command-line front end: synth | augment | train | eval | metrics.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pointcam/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace pointcam;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_config_file(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void print_report(const metrics::MetricsReport& report) {
  const auto line = [](const char* name, const std::optional<double>& v) {
    if (v) std::printf("%s: %.6g\n", name, *v);
  };
  line("auroc", report.auroc);
  line("aupr", report.aupr);
  line("fpr_at_95_tpr", report.fpr_at_95_tpr);
  line("detection_error", report.detection_error);
  line("miou", report.miou);
  line("accuracy_sample", report.accuracy_sample);
  line("accuracy_class", report.accuracy_class);
}

int run_synth(const std::string& config_path, std::uint64_t seed,
              const std::string& out, bool force) {
  data::SynthSpec spec;
  data::SplitConfig split;
  split.dataset = "synthetic";
  split.task = "classification";
  split.known_classes = {"sphere", "cube", "cylinder"};
  split.unknown_classes = {"torus"};
  if (!config_path.empty()) {
    const json j = parse_config_file(config_path);
    spec.classes = j.value("classes", spec.classes);
    spec.points_per_sample = j.value("points_per_sample", spec.points_per_sample);
    spec.samples_per_class = j.value("samples_per_class", spec.samples_per_class);
    spec.train_fraction = j.value("train_fraction", spec.train_fraction);
    spec.scale_jitter = j.value("scale_jitter", spec.scale_jitter);
    spec.rotation_jitter = j.value("rotation_jitter", spec.rotation_jitter);
    split.dataset = j.value("name", split.dataset);
    split.task = j.value("task", split.task);
    split.known_classes = j.value("known", split.known_classes);
    split.unknown_classes = j.value("unknown", split.unknown_classes);
  }
  pipeline::cmd_synth(spec, split, out, seed, force);
  std::printf("dataset written to %s (split: %s)\n", out.c_str(),
              (out + "/split.json").c_str());
  return 0;
}

int run_augment(const std::string& input, const std::string& config_path,
                const std::string& generator, int unknown_label, std::uint64_t seed,
                const std::string& out, bool force) {
  ups::UpsParams params;
  params.generator = ups::Generator::cut_and_mix;
  if (!config_path.empty()) {
    // Reuse the run-config parser: wrap the simulator block the way a
    // training config embeds it.
    json wrapper;
    wrapper["seed"] = 0;
    wrapper["ups"] = parse_config_file(config_path);
    params = pipeline::run_config_from_json(wrapper.dump()).ups;
  }
  if (!generator.empty()) params.generator = pipeline::generator_from_name(generator);
  pipeline::cmd_augment(input, params, unknown_label, seed, out, force);
  std::printf("augmented cloud written to %s\n", (out + "/augmented.txt").c_str());
  return 0;
}

int run_train(const std::string& config_path, bool seed_given, std::uint64_t seed,
              const std::string& out, bool force) {
  json j = parse_config_file(config_path);
  if (seed_given) j["seed"] = seed;
  if (!out.empty()) j["out_dir"] = out;
  pipeline::RunConfig config;
  try {
    config = pipeline::run_config_from_json(j.dump());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(config_path + ": " + e.what());
  }
  const pipeline::TrainResult result = pipeline::cmd_train(config, force);
  std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
  std::printf("log: %s\n", result.log_path.c_str());
  std::printf("final task loss: %.6g, train accuracy: %.6g\n", result.final_task_loss,
              result.final_train_accuracy);
  return 0;
}

int run_eval(const std::string& model_dir, const std::string& score_fn,
             const std::string& out, bool force, const std::string& dataset_dir,
             const std::string& split_file) {
  const pipeline::EvalResult result =
      pipeline::cmd_eval(model_dir, score_fn, out, force, dataset_dir, split_file);
  std::printf("scores: %s (%zu units)\n", result.scores_path.c_str(),
              result.scores.size());
  print_report(result.report);
  return 0;
}

int run_metrics(const std::string& scores_path, const std::string& out, bool force) {
  const metrics::MetricsReport report = pipeline::cmd_metrics(scores_path, out, force);
  print_report(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-cloud open-set training and evaluation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string input;
  std::string out;
  std::string generator;
  std::string score_fn = "msp";
  std::string dataset_dir;
  std::string split_file;
  std::uint64_t seed = 0;
  int unknown_label = -1;
  bool force = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "synthesis spec JSON");
  synth->add_option("--seed", seed, "master RNG seed")->required();
  synth->add_option("--out", out, "output directory")->required();
  synth->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI::App* augment = app.add_subcommand("augment", "run the simulator on one cloud file");
  augment->add_option("input", input, "labeled-points file")->required();
  augment->add_option("--config", config_path, "simulator params JSON");
  CLI::Option* gen_opt =
      augment->add_option("--generator", generator, "cutmix|rotation|translation|scaling|noise")
          ->check(CLI::IsMember({"cutmix", "rotation", "translation", "scaling", "noise"}));
  augment->add_option("--unknown-label", unknown_label,
                      "label for simulated points (default: max input label + 1)");
  augment->add_option("--seed", seed, "master RNG seed")->required();
  augment->add_option("--out", out, "output directory")->required();
  augment->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI::App* train = app.add_subcommand("train", "train a model from a run config");
  train->add_option("--config", config_path, "run config JSON")->required();
  CLI::Option* seed_opt = train->add_option("--seed", seed, "master RNG seed (overrides config)");
  train->add_option("--out", out, "output directory (overrides config)");
  train->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI::App* eval = app.add_subcommand("eval", "score an evaluation split");
  eval->add_option("model_dir", input, "directory holding config.json + checkpoint.bin")
      ->required();
  eval->add_option("--score-fn", score_fn, "msp|maxlogit|upe")
      ->check(CLI::IsMember({"msp", "maxlogit", "upe"}));
  eval->add_option("--dataset", dataset_dir, "override the trained dataset directory");
  eval->add_option("--split", split_file, "override the trained split file");
  eval->add_option("--out", out, "output directory")->required();
  eval->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI::App* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from scores.csv");
  metrics_cmd->add_option("scores", input, "scores.csv from eval")->required();
  metrics_cmd->add_option("--out", out, "output directory")->required();
  metrics_cmd->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(config_path, seed, out, force);
    if (augment->parsed()) {
      return run_augment(input, config_path, gen_opt->count() ? generator : "",
                         unknown_label, seed, out, force);
    }
    if (train->parsed()) {
      return run_train(config_path, seed_opt->count() > 0, seed, out, force);
    }
    if (eval->parsed()) {
      return run_eval(input, score_fn, out, force, dataset_dir, split_file);
    }
    if (metrics_cmd->parsed()) return run_metrics(input, out, force);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
