#pragma once

#include <string>
#include <vector>

#include "pointcam/geometry.hpp"

namespace pointcam::data {

/// Text rows "x y z label" or "x y z r g b label"; color columns are parsed
/// and discarded. With labels_required = false, 3- and 6-column rows are
/// also accepted and yield an unlabeled cloud. Column count must be uniform;
/// errors carry the 1-based row number.
geometry::PointCloud parse_labeled_points(const std::string& text,
                                          bool labels_required = true);
geometry::PointCloud load_labeled_points(const std::string& path,
                                         bool labels_required = true);

/// "x y z label" rows (or "x y z" when unlabeled) with round-trip exact
/// coordinates: parse(write(c)) == c.
std::string write_labeled_points(const geometry::PointCloud& cloud);
void save_labeled_points(const std::string& path, const geometry::PointCloud& cloud);

struct Sample {
  geometry::PointCloud cloud;  // labels are ids into Dataset::class_names
  std::string class_name;      // classification target; empty for segmentation
  std::string split;           // "train" or "test"
};

struct Dataset {
  std::string name;
  std::string task;  // "classification" | "segmentation"
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  void validate() const;
  int class_id(const std::string& name) const;  // -1 when absent
};

/// Directory layout: manifest.json (name, task, classes, sample table) and
/// clouds/<sample>.txt point files. Samples are listed in manifest order.
void save_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

/// JSON {"dataset": ..., "task": ..., "known": [...], "unknown": [...]}.
struct SplitConfig {
  std::string dataset;
  std::string task;
  std::vector<std::string> known_classes;
  std::vector<std::string> unknown_classes;

  /// Both lists non-empty and disjoint.
  void validate() const;
  int unknown_id() const { return static_cast<int>(known_classes.size()); }
};

SplitConfig load_split_config(const std::string& path);
void save_split_config(const std::string& path, const SplitConfig& config);

/// One evaluation or training unit after the split: labels remapped so the
/// known classes take ids 0..N_c-1 in config order and every unknown class
/// collapses to id N_c.
struct SplitUnit {
  std::string id;
  geometry::PointCloud cloud;  // segmentation: per-point remapped labels
  int class_id = -1;           // classification target (N_c when unknown)
  bool is_unknown = false;     // classification: sample level
};

struct SplitView {
  std::vector<std::string> known_classes;
  std::vector<SplitUnit> train;  // known classes only
  std::vector<SplitUnit> eval;   // held-out known units plus all unknowns
  int unknown_id() const { return static_cast<int>(known_classes.size()); }
};

/// Classification: known train-split samples train; known test-split samples
/// and every unknown-class sample evaluate. Segmentation: train-split clouds
/// train with unknown-labeled points removed; test-split clouds evaluate
/// with all points kept. Throws std::invalid_argument when config classes
/// are missing from the dataset or the lists overlap.
SplitView apply_split(const Dataset& dataset, const SplitConfig& config);

}  // namespace pointcam::data
