#include "pointcam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "pointcam/optim.hpp"
#include "pointcam/svg.hpp"

namespace pointcam::pipeline {

namespace fs = std::filesystem;
using geometry::PointCloud;
using geometry::Vec3;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

void prepare_out_dir(const std::string& dir, bool force) {
  if (dir.empty()) throw std::invalid_argument("output directory not set");
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw std::runtime_error("output path '" + dir + "' is not a directory");
    }
    if (!fs::is_empty(dir) && !force) {
      throw std::runtime_error("output directory '" + dir +
                               "' is not empty (pass --force to overwrite)");
    }
  } else {
    fs::create_directories(dir);
  }
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Wall-clock sidecar. Everything else a command writes is reproducible
/// byte-for-byte from (config, seed); timestamps live only here.
void write_run_meta(const std::string& dir, const std::string& command,
                    std::uint64_t seed, const std::string& started) {
  json meta;
  meta["command"] = command;
  meta["seed"] = seed;
  meta["started_utc"] = started;
  meta["finished_utc"] = now_utc();
  write_file((fs::path(dir) / "run_meta.json").string(), meta.dump(2) + "\n");
}

void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.uniform_int(static_cast<int>(i))]);
  }
}

/// Seed-stream layout: index 0 initializes the model, 1 + epoch shuffles
/// that epoch, and kSampleStreamBase + epoch*n + position feeds the
/// augmentation of one training instance.
constexpr std::uint64_t kSampleStreamBase = 1ULL << 20;

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
}

void RunConfig::validate() const {
  if (task != "classification" && task != "segmentation") {
    throw std::invalid_argument("unknown task '" + task + "'");
  }
  if (dataset_dir.empty()) throw std::invalid_argument("dataset_dir not set");
  if (split_file.empty()) throw std::invalid_argument("split_file not set");
  optimizer.validate();
  upe.validate();
  if (ups_enabled) {
    ups.validate();
    if (task == "classification" && ups.generator == ups::Generator::cut_and_mix &&
        ups.beta_min <= 0.0) {
      throw std::invalid_argument(
          "classification sample mixing needs beta_min > 0");
    }
  }
  if (crop_points < 0) throw std::invalid_argument("crop_points must be non-negative");
}

ups::Generator generator_from_name(const std::string& name) {
  if (name == "cutmix") return ups::Generator::cut_and_mix;
  if (name == "rotation") return ups::Generator::rotation_only;
  if (name == "translation") return ups::Generator::translation_only;
  if (name == "scaling") return ups::Generator::scaling;
  if (name == "noise") return ups::Generator::gaussian_noise;
  if (name == "none") return ups::Generator::none;
  throw std::invalid_argument("unknown generator '" + name +
                              "' (expected cutmix|rotation|translation|scaling|noise|none)");
}

std::string generator_name(ups::Generator generator) {
  switch (generator) {
    case ups::Generator::cut_and_mix: return "cutmix";
    case ups::Generator::rotation_only: return "rotation";
    case ups::Generator::translation_only: return "translation";
    case ups::Generator::scaling: return "scaling";
    case ups::Generator::gaussian_noise: return "noise";
    case ups::Generator::none: return "none";
  }
  throw std::logic_error("unhandled generator");
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("run config: ") + e.what());
  }
  RunConfig c;
  if (!j.contains("seed")) {
    throw std::runtime_error("run config must set \"seed\"");
  }
  c.seed = j["seed"].get<std::uint64_t>();
  c.task = j.value("task", c.task);
  c.backbone.head = c.task == "segmentation" ? network::TaskHead::segmentation
                                             : network::TaskHead::classification;
  c.dataset_dir = j.value("dataset_dir", c.dataset_dir);
  c.split_file = j.value("split_file", c.split_file);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.crop_points = j.value("crop_points", c.crop_points);
  if (j.contains("backbone")) {
    const json& b = j["backbone"];
    c.backbone.levels = b.value("levels", c.backbone.levels);
    c.backbone.channels = b.value("channels", c.backbone.channels);
    c.backbone.level_divisors = b.value("level_divisors", c.backbone.level_divisors);
    c.backbone.head_hidden = b.value("head_hidden", c.backbone.head_hidden);
    c.backbone.num_known_classes = b.value("num_known_classes", 0);
    c.backbone.unknown_logit = b.value("unknown_logit", c.backbone.unknown_logit);
  }
  if (j.contains("upe")) {
    const json& u = j["upe"];
    c.upe.enabled = u.value("enabled", c.upe.enabled);
    c.upe.hidden = u.value("hidden", c.upe.hidden);
    c.upe.alpha = u.value("alpha", c.upe.alpha);
    c.upe.point_guided = u.value("point_guided", c.upe.point_guided);
    c.upe.psi_uses_features = u.value("psi_uses_features", c.upe.psi_uses_features);
  }
  if (j.contains("ups")) {
    const json& u = j["ups"];
    c.ups_enabled = u.value("enabled", c.ups_enabled);
    c.ups.generator = generator_from_name(u.value("generator", generator_name(c.ups.generator)));
    c.ups.beta_min = u.value("beta_min", c.ups.beta_min);
    c.ups.beta_max = u.value("beta_max", c.ups.beta_max);
    c.ups.aug_ratio = u.value("aug_ratio", c.ups.aug_ratio);
    c.ups.rotation_max_angle = u.value("rotation_max_angle", c.ups.rotation_max_angle);
    c.ups.translation_range_fraction =
        u.value("translation_range_fraction", c.ups.translation_range_fraction);
    c.ups.scale_min = u.value("scale_min", c.ups.scale_min);
    c.ups.scale_max = u.value("scale_max", c.ups.scale_max);
    c.ups.noise_sigma_fraction = u.value("noise_sigma_fraction", c.ups.noise_sigma_fraction);
    const std::string donor = u.value(
        "donor_selection",
        c.ups.donor_selection == ups::DonorSelection::seed_knn ? "seed_knn" : "uniform");
    if (donor == "seed_knn") {
      c.ups.donor_selection = ups::DonorSelection::seed_knn;
    } else if (donor == "uniform") {
      c.ups.donor_selection = ups::DonorSelection::uniform;
    } else {
      throw std::runtime_error("unknown donor_selection '" + donor + "'");
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.epochs = o.value("epochs", c.optimizer.epochs);
    c.optimizer.batch_size = o.value("batch_size", c.optimizer.batch_size);
  }
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["task"] = c.task;
  j["dataset_dir"] = c.dataset_dir;
  j["split_file"] = c.split_file;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["crop_points"] = c.crop_points;
  j["backbone"] = {{"levels", c.backbone.levels},
                   {"channels", c.backbone.channels},
                   {"level_divisors", c.backbone.level_divisors},
                   {"head_hidden", c.backbone.head_hidden},
                   {"num_known_classes", c.backbone.num_known_classes},
                   {"unknown_logit", c.backbone.unknown_logit}};
  j["upe"] = {{"enabled", c.upe.enabled},
              {"hidden", c.upe.hidden},
              {"alpha", c.upe.alpha},
              {"point_guided", c.upe.point_guided},
              {"psi_uses_features", c.upe.psi_uses_features}};
  j["ups"] = {{"enabled", c.ups_enabled},
              {"generator", generator_name(c.ups.generator)},
              {"beta_min", c.ups.beta_min},
              {"beta_max", c.ups.beta_max},
              {"aug_ratio", c.ups.aug_ratio},
              {"rotation_max_angle", c.ups.rotation_max_angle},
              {"translation_range_fraction", c.ups.translation_range_fraction},
              {"scale_min", c.ups.scale_min},
              {"scale_max", c.ups.scale_max},
              {"noise_sigma_fraction", c.ups.noise_sigma_fraction},
              {"donor_selection",
               c.ups.donor_selection == ups::DonorSelection::seed_knn ? "seed_knn"
                                                                      : "uniform"}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"epochs", c.optimizer.epochs},
                    {"batch_size", c.optimizer.batch_size}};
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  try {
    return run_config_from_json(read_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_run_config(const std::string& path, const RunConfig& config) {
  write_file(path, run_config_to_json(config));
}

void cmd_synth(const data::SynthSpec& spec, const data::SplitConfig& split,
               const std::string& out_dir, std::uint64_t seed, bool force) {
  spec.validate();
  split.validate();
  const std::string started = now_utc();
  prepare_out_dir(out_dir, force);
  Rng rng(derive_seed(seed, 0));
  const data::Dataset dataset = split.task == "segmentation"
                                    ? data::synth_scenes(spec, rng)
                                    : data::synth_shapes(spec, rng);
  data::save_dataset(out_dir, dataset);
  data::save_split_config((fs::path(out_dir) / "split.json").string(), split);
  write_run_meta(out_dir, "synth", seed, started);
}

void cmd_augment(const std::string& cloud_path, const ups::UpsParams& params,
                 int unknown_label, std::uint64_t seed, const std::string& out_dir,
                 bool force) {
  params.validate();
  if (params.generator == ups::Generator::none) {
    throw std::invalid_argument("augment needs a generator (cutmix|rotation|translation|scaling|noise)");
  }
  PointCloud cloud = data::load_labeled_points(cloud_path, false);
  if (!cloud.has_labels()) {
    cloud.labels.emplace(cloud.size(), 0);  // unlabeled input: single class 0
  }
  int resolved_unknown = unknown_label;
  if (resolved_unknown < 0) {
    resolved_unknown = 1 + *std::max_element(cloud.labels->begin(), cloud.labels->end());
  }
  const std::string started = now_utc();
  prepare_out_dir(out_dir, force);

  Rng rng(derive_seed(seed, 0));
  const ups::AugmentedCloud aug =
      params.generator == ups::Generator::cut_and_mix
          ? ups::ups_segmentation(cloud, params, resolved_unknown, rng)
          : ups::generate_variant(cloud, params, resolved_unknown, rng);

  PointCloud out;
  out.coords = aug.coords;
  out.labels = aug.task_labels;
  data::save_labeled_points((fs::path(out_dir) / "augmented.txt").string(), out);
  std::ostringstream mask;
  for (int idx : aug.selected) mask << idx << '\n';
  write_file((fs::path(out_dir) / "mask.txt").string(), mask.str());
  write_run_meta(out_dir, "augment", seed, started);
}

namespace {

struct TrainStats {
  double task_sum = 0.0;
  double upe_sum = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

/// Argmax over the full logit width, for the training-accuracy column.
int full_argmax_row(const autodiff::Tensor& logits, int row) {
  const int m = logits.cols();
  const double* v = &logits.values()[static_cast<std::size_t>(row) * m];
  int best = 0;
  for (int j = 1; j < m; ++j) {
    if (v[j] > v[best]) best = j;
  }
  return best;
}

[[noreturn]] void report_nan(const network::Model& model, int epoch, int batch) {
  std::string offender = "none (parameters finite; a forward activation overflowed)";
  for (const auto& nt : model.named_parameters()) {
    bool bad = false;
    for (double v : nt.tensor.values()) bad = bad || !std::isfinite(v);
    if (nt.tensor.requires_grad()) {
      for (double g : nt.tensor.grad()) bad = bad || !std::isfinite(g);
    }
    if (bad) {
      offender = "'" + nt.name + "'";
      break;
    }
  }
  throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch) +
                           "; first non-finite parameter: " + offender);
}

/// Random subset of crop_points rows, original order preserved.
void crop_cloud(PointCloud& cloud, int crop_points, Rng& rng) {
  const int n = cloud.size();
  if (crop_points <= 0 || n <= crop_points) return;
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < crop_points; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_int(n - i)]);
  }
  pool.resize(crop_points);
  std::sort(pool.begin(), pool.end());
  PointCloud cropped;
  cropped.id = cloud.id;
  cropped.labels.emplace();
  for (int idx : pool) {
    cropped.coords.push_back(cloud.coords[idx]);
    cropped.labels->push_back((*cloud.labels)[idx]);
  }
  cloud = std::move(cropped);
}

}  // namespace

TrainResult cmd_train(const RunConfig& config, bool force) {
  config.validate();
  const data::Dataset dataset = data::load_dataset(config.dataset_dir);
  const data::SplitConfig split = data::load_split_config(config.split_file);
  if (dataset.task != config.task || split.task != config.task) {
    throw std::invalid_argument("task mismatch: config says '" + config.task +
                                "', dataset is '" + dataset.task + "', split is '" +
                                split.task + "'");
  }
  data::SplitView view = data::apply_split(dataset, split);
  if (view.train.empty()) throw std::invalid_argument("split leaves no training data");
  for (data::SplitUnit& unit : view.train) {
    unit.cloud = geometry::normalize_cloud(unit.cloud);
  }

  const bool augment =
      config.ups_enabled && config.ups.generator != ups::Generator::none;
  const int unknown_id = view.unknown_id();

  RunConfig resolved = config;
  resolved.backbone.num_known_classes = static_cast<int>(view.known_classes.size());
  resolved.backbone.unknown_logit = augment;
  resolved.backbone.head = config.task == "segmentation"
                               ? network::TaskHead::segmentation
                               : network::TaskHead::classification;
  resolved.backbone.validate();

  const std::string started = now_utc();
  prepare_out_dir(resolved.out_dir, force);

  Rng init_rng(derive_seed(resolved.seed, 0));
  network::Model model(resolved.backbone, resolved.upe, init_rng);
  std::vector<autodiff::Tensor> params = model.parameters();
  autodiff::AdamConfig adam_config;
  adam_config.learning_rate = resolved.optimizer.learning_rate;
  autodiff::AdamState adam = autodiff::make_adam_state(adam_config, params);

  const int n_train = static_cast<int>(view.train.size());
  const bool classification = config.task == "classification";

  // Donor pools for sample mixing: every train sample of a different class.
  std::vector<std::vector<int>> donors_of(n_train);
  if (classification && augment) {
    for (int i = 0; i < n_train; ++i) {
      for (int j = 0; j < n_train; ++j) {
        if (view.train[j].class_id != view.train[i].class_id) {
          donors_of[i].push_back(j);
        }
      }
    }
  }

  std::ostringstream log;
  log << "epoch,task_loss,upe_loss,train_accuracy\n";
  TrainResult result;

  const int batch_size = resolved.optimizer.batch_size;
  for (int epoch = 0; epoch < resolved.optimizer.epochs; ++epoch) {
    std::vector<int> order(n_train);
    for (int i = 0; i < n_train; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(resolved.seed, 1 + static_cast<std::uint64_t>(epoch)));
    fisher_yates(order, shuffle_rng);

    TrainStats stats;
    int in_batch = 0;
    int batch_index = 0;
    for (int position = 0; position < n_train; ++position) {
      const data::SplitUnit& unit = view.train[order[position]];
      Rng sample_rng(derive_seed(
          resolved.seed, kSampleStreamBase +
                             static_cast<std::uint64_t>(epoch) * n_train + position));

      std::vector<Vec3> coords;
      std::vector<int> labels;
      std::vector<double> refs;
      if (classification) {
        int label = unit.class_id;
        if (augment && sample_rng.uniform() < resolved.ups.aug_ratio) {
          ups::AugmentedCloud aug;
          if (resolved.ups.generator == ups::Generator::cut_and_mix) {
            const std::vector<int>& pool = donors_of[order[position]];
            if (pool.empty()) {
              throw std::invalid_argument("sample mixing needs a second known class");
            }
            const int donor = pool[sample_rng.uniform_int(static_cast<int>(pool.size()))];
            aug = ups::uss_classification(unit.cloud, view.train[donor].cloud,
                                          resolved.ups, unknown_id, sample_rng);
          } else {
            aug = ups::generate_variant(unit.cloud, resolved.ups, unknown_id, sample_rng);
          }
          coords = std::move(aug.coords);
          refs = std::move(aug.ref_scores);
          // A zero-size selection means the draw rounded to no points; the
          // sample is still its own class.
          if (!aug.selected.empty()) label = unknown_id;
        } else {
          coords = unit.cloud.coords;
          refs.assign(coords.size(), 0.0);
        }
        labels.assign(1, label);
      } else {
        PointCloud cloud = unit.cloud;
        crop_cloud(cloud, resolved.crop_points, sample_rng);
        if (augment && sample_rng.uniform() < resolved.ups.aug_ratio) {
          ups::AugmentedCloud aug =
              resolved.ups.generator == ups::Generator::cut_and_mix
                  ? ups::ups_segmentation(cloud, resolved.ups, unknown_id, sample_rng)
                  : ups::generate_variant(cloud, resolved.ups, unknown_id, sample_rng);
          coords = std::move(aug.coords);
          labels = std::move(aug.task_labels);
          refs = std::move(aug.ref_scores);
        } else {
          coords = cloud.coords;
          labels = *cloud.labels;
          refs.assign(coords.size(), 0.0);
        }
      }

      const network::ForwardOutput out = model.forward(coords);
      const network::LossParts loss =
          network::total_loss(out, labels, refs, resolved.upe.alpha);
      if (!std::isfinite(loss.total.item())) {
        report_nan(model, epoch, batch_index);
      }
      const int count =
          std::min(batch_size, n_train - (position / batch_size) * batch_size);
      autodiff::backward(autodiff::scale(loss.total, 1.0 / count));

      stats.task_sum += loss.task.item();
      stats.upe_sum += loss.upe.item();
      for (std::size_t row = 0; row < labels.size(); ++row) {
        stats.total += 1;
        if (full_argmax_row(out.logits, static_cast<int>(row)) == labels[row]) {
          stats.correct += 1;
        }
      }

      if (++in_batch == batch_size || position == n_train - 1) {
        autodiff::adam_step(params, adam);
        autodiff::zero_grads(params);
        in_batch = 0;
        ++batch_index;
      }
    }

    result.final_task_loss = stats.task_sum / n_train;
    result.final_train_accuracy =
        static_cast<double>(stats.correct) / static_cast<double>(stats.total);
    log << epoch << ',' << csv_double(stats.task_sum / n_train) << ','
        << csv_double(stats.upe_sum / n_train) << ','
        << csv_double(result.final_train_accuracy) << '\n';
  }

  result.config_path = (fs::path(resolved.out_dir) / "config.json").string();
  result.checkpoint_path = (fs::path(resolved.out_dir) / "checkpoint.bin").string();
  result.log_path = (fs::path(resolved.out_dir) / "train_log.csv").string();
  save_run_config(result.config_path, resolved);
  autodiff::save_checkpoint(result.checkpoint_path, model.named_parameters());
  write_file(result.log_path, log.str());
  write_run_meta(resolved.out_dir, "train", resolved.seed, started);
  return result;
}

EvalResult cmd_eval(const std::string& model_dir, const std::string& score_fn,
                    const std::string& out_dir, bool force,
                    const std::string& dataset_dir, const std::string& split_file) {
  if (score_fn != "msp" && score_fn != "maxlogit" && score_fn != "upe") {
    throw std::invalid_argument("unknown score function '" + score_fn +
                                "' (expected msp|maxlogit|upe)");
  }
  RunConfig config = load_run_config((fs::path(model_dir) / "config.json").string());
  if (!dataset_dir.empty()) config.dataset_dir = dataset_dir;
  if (!split_file.empty()) config.split_file = split_file;
  if (score_fn == "upe" && !config.upe.enabled) {
    throw std::invalid_argument("model in '" + model_dir +
                                "' was trained without the score estimator");
  }

  const data::Dataset dataset = data::load_dataset(config.dataset_dir);
  const data::SplitConfig split = data::load_split_config(config.split_file);
  data::SplitView view = data::apply_split(dataset, split);
  if (view.eval.empty()) throw std::invalid_argument("split leaves no evaluation data");

  Rng dummy_rng(0);  // weights come from the checkpoint
  network::Model model(config.backbone, config.upe, dummy_rng);
  model.load_parameters(
      autodiff::load_checkpoint((fs::path(model_dir) / "checkpoint.bin").string()));

  const std::string started = now_utc();
  prepare_out_dir(out_dir, force);

  const int num_known = config.backbone.num_known_classes;
  const int unknown_id = view.unknown_id();
  const bool classification = config.task == "classification";

  EvalResult result;
  std::vector<int> closed_pred;
  std::vector<int> closed_gt;
  for (const data::SplitUnit& unit : view.eval) {
    const PointCloud cloud = geometry::normalize_cloud(unit.cloud);
    const network::ForwardOutput out = model.forward(cloud.coords);
    std::vector<double> scores;
    if (score_fn == "msp") {
      scores = network::msp_scores(out.logits);
    } else if (score_fn == "maxlogit") {
      scores = network::maxlogit_scores(out.logits);
    } else {
      scores = out.upe_scores.values();  // one fused score per point
    }
    if (classification) {
      const double score =
          score_fn == "upe" ? network::sample_unknown_score(scores) : scores[0];
      result.scores.push_back({unit.id, score, unit.is_unknown});
      if (!unit.is_unknown) {
        closed_pred.push_back(network::known_class_argmax(out.logits, num_known)[0]);
        closed_gt.push_back(unit.class_id);
      }
    } else {
      const std::vector<int> pred = network::known_class_argmax(out.logits, num_known);
      const std::vector<int>& labels = *cloud.labels;
      for (std::size_t p = 0; p < labels.size(); ++p) {
        result.scores.push_back({unit.id + ":" + std::to_string(p), scores[p],
                                 labels[p] == unknown_id});
        if (labels[p] != unknown_id) {
          closed_pred.push_back(pred[p]);
          closed_gt.push_back(labels[p]);
        }
      }
    }
  }

  bool any_unknown = false;
  for (const auto& r : result.scores) any_unknown = any_unknown || r.is_unknown;
  if (any_unknown) {
    result.report = metrics::open_set_report(result.scores);
  } else {
    std::fprintf(stderr,
                 "warning: evaluation set has no unknown units; open-set "
                 "metrics omitted\n");
  }
  if (!closed_gt.empty()) {
    if (classification) {
      result.report.accuracy_sample =
          metrics::accuracy(closed_pred, closed_gt, metrics::AccuracyMode::per_sample);
      result.report.accuracy_class = metrics::accuracy(
          closed_pred, closed_gt, metrics::AccuracyMode::per_class_mean);
    } else {
      result.report.miou = metrics::miou(closed_pred, closed_gt, num_known);
      result.report.accuracy_sample =
          metrics::accuracy(closed_pred, closed_gt, metrics::AccuracyMode::per_sample);
    }
  }

  result.scores_path = (fs::path(out_dir) / "scores.csv").string();
  result.metrics_path = (fs::path(out_dir) / "metrics.json").string();
  result.histogram_path = (fs::path(out_dir) / "histogram.svg").string();
  metrics::write_scores_csv(result.scores_path, result.scores);
  write_file(result.metrics_path, metrics::report_to_json(result.report));
  write_score_histogram(result.histogram_path, result.scores);
  write_run_meta(out_dir, "eval", config.seed, started);
  return result;
}

metrics::MetricsReport cmd_metrics(const std::string& scores_path,
                                   const std::string& out_dir, bool force) {
  const std::vector<metrics::ScoreRecord> dump = metrics::read_scores_csv(scores_path);
  const metrics::MetricsReport report = metrics::open_set_report(dump);
  const std::string started = now_utc();
  prepare_out_dir(out_dir, force);
  write_file((fs::path(out_dir) / "metrics.json").string(),
             metrics::report_to_json(report));
  write_run_meta(out_dir, "metrics", 0, started);
  return report;
}

}  // namespace pointcam::pipeline
