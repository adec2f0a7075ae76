#include "pointcam/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace pointcam::data {

namespace fs = std::filesystem;
using geometry::PointCloud;
using nlohmann::json;

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

double parse_coord(const std::string& token, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw std::runtime_error("row " + std::to_string(row) + ": bad number '" +
                             token + "'");
  }
  return v;
}

int parse_label(const std::string& token, std::size_t row) {
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0') {
    throw std::runtime_error("row " + std::to_string(row) + ": bad label '" +
                             token + "'");
  }
  return static_cast<int>(v);
}

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

}  // namespace

PointCloud parse_labeled_points(const std::string& text, bool labels_required) {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::size_t columns = 0;  // fixed by the first data row
  PointCloud cloud;
  bool labeled = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_tokens(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (columns == 0) {
      columns = tokens.size();
      if (columns != 3 && columns != 4 && columns != 6 && columns != 7) {
        throw std::runtime_error("row " + std::to_string(row) + ": expected "
                                 "3, 4, 6, or 7 columns, got " +
                                 std::to_string(columns));
      }
      labeled = columns == 4 || columns == 7;
      if (labels_required && !labeled) {
        throw std::runtime_error("row " + std::to_string(row) + ": row has " +
                                 std::to_string(columns) +
                                 " columns and no label column");
      }
      if (labeled) cloud.labels.emplace();
    } else if (tokens.size() != columns) {
      throw std::runtime_error("row " + std::to_string(row) + ": expected " +
                               std::to_string(columns) + " columns, got " +
                               std::to_string(tokens.size()));
    }
    geometry::Vec3 p;
    p.x = parse_coord(tokens[0], row);
    p.y = parse_coord(tokens[1], row);
    p.z = parse_coord(tokens[2], row);
    cloud.coords.push_back(p);  // columns 3..5 of 6/7-wide rows are color
    if (labeled) cloud.labels->push_back(parse_label(tokens.back(), row));
  }
  if (cloud.coords.empty()) throw std::runtime_error("no point rows in input");
  return cloud;
}

PointCloud load_labeled_points(const std::string& path, bool labels_required) {
  try {
    PointCloud cloud = parse_labeled_points(read_file(path), labels_required);
    cloud.id = fs::path(path).stem().string();
    return cloud;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string write_labeled_points(const PointCloud& cloud) {
  cloud.validate();
  std::ostringstream out;
  char buf[96];
  for (std::size_t i = 0; i < cloud.coords.size(); ++i) {
    const geometry::Vec3& p = cloud.coords[i];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", p.x, p.y, p.z);
    out << buf;
    if (cloud.labels) out << ' ' << (*cloud.labels)[i];
    out << '\n';
  }
  return out.str();
}

void save_labeled_points(const std::string& path, const PointCloud& cloud) {
  write_file(path, write_labeled_points(cloud));
}

void Dataset::validate() const {
  if (task != "classification" && task != "segmentation") {
    throw std::invalid_argument("unknown task '" + task + "'");
  }
  if (class_names.empty()) throw std::invalid_argument("dataset lists no classes");
  std::set<std::string> seen(class_names.begin(), class_names.end());
  if (seen.size() != class_names.size()) {
    throw std::invalid_argument("duplicate class names in dataset");
  }
  std::set<std::string> ids;
  for (const Sample& s : samples) {
    s.cloud.validate();
    if (s.cloud.id.empty() || !ids.insert(s.cloud.id).second) {
      throw std::invalid_argument("sample ids must be unique and non-empty, got '" +
                                  s.cloud.id + "'");
    }
    if (s.split != "train" && s.split != "test") {
      throw std::invalid_argument("sample '" + s.cloud.id + "' has split '" +
                                  s.split + "'");
    }
    if (task == "classification") {
      if (class_id(s.class_name) < 0) {
        throw std::invalid_argument("sample '" + s.cloud.id + "' has class '" +
                                    s.class_name + "' not in the class list");
      }
    } else {
      if (!s.cloud.has_labels()) {
        throw std::invalid_argument("segmentation sample '" + s.cloud.id +
                                    "' has no point labels");
      }
      for (int l : *s.cloud.labels) {
        if (l < 0 || l >= static_cast<int>(class_names.size())) {
          throw std::invalid_argument("sample '" + s.cloud.id + "' holds label " +
                                      std::to_string(l) + " outside the class list");
        }
      }
    }
  }
}

int Dataset::class_id(const std::string& name) const {
  const auto it = std::find(class_names.begin(), class_names.end(), name);
  return it == class_names.end() ? -1 : static_cast<int>(it - class_names.begin());
}

void save_dataset(const std::string& dir, const Dataset& dataset) {
  dataset.validate();
  fs::create_directories(fs::path(dir) / "clouds");
  json manifest;
  manifest["name"] = dataset.name;
  manifest["task"] = dataset.task;
  manifest["classes"] = dataset.class_names;
  manifest["samples"] = json::array();
  for (const Sample& s : dataset.samples) {
    const std::string rel = "clouds/" + s.cloud.id + ".txt";
    save_labeled_points((fs::path(dir) / rel).string(), s.cloud);
    json entry;
    entry["file"] = rel;
    entry["split"] = s.split;
    if (dataset.task == "classification") entry["class"] = s.class_name;
    manifest["samples"].push_back(entry);
  }
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(manifest_path + ": " + e.what());
  }
  Dataset dataset;
  dataset.name = manifest.at("name").get<std::string>();
  dataset.task = manifest.at("task").get<std::string>();
  dataset.class_names = manifest.at("classes").get<std::vector<std::string>>();
  for (const json& entry : manifest.at("samples")) {
    Sample s;
    const std::string rel = entry.at("file").get<std::string>();
    s.split = entry.at("split").get<std::string>();
    const bool segmentation = dataset.task == "segmentation";
    s.cloud = load_labeled_points((fs::path(dir) / rel).string(), segmentation);
    if (!segmentation) {
      s.class_name = entry.at("class").get<std::string>();
      if (!s.cloud.has_labels()) {
        const int id = dataset.class_id(s.class_name);
        s.cloud.labels.emplace(s.cloud.size(), id);
      }
    }
    dataset.samples.push_back(std::move(s));
  }
  dataset.validate();
  return dataset;
}

void SplitConfig::validate() const {
  if (known_classes.empty() || unknown_classes.empty()) {
    throw std::invalid_argument("split needs at least one known and one unknown class");
  }
  std::set<std::string> known(known_classes.begin(), known_classes.end());
  std::set<std::string> unknown(unknown_classes.begin(), unknown_classes.end());
  if (known.size() != known_classes.size() || unknown.size() != unknown_classes.size()) {
    throw std::invalid_argument("split lists a class twice");
  }
  for (const std::string& c : known_classes) {
    if (unknown.count(c)) {
      throw std::invalid_argument("class '" + c + "' is both known and unknown");
    }
  }
}

SplitConfig load_split_config(const std::string& path) {
  json config;
  try {
    config = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  SplitConfig out;
  try {
    out.dataset = config.at("dataset").get<std::string>();
    out.task = config.at("task").get<std::string>();
    out.known_classes = config.at("known").get<std::vector<std::string>>();
    out.unknown_classes = config.at("unknown").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  out.validate();
  return out;
}

void save_split_config(const std::string& path, const SplitConfig& config) {
  config.validate();
  json out;
  out["dataset"] = config.dataset;
  out["task"] = config.task;
  out["known"] = config.known_classes;
  out["unknown"] = config.unknown_classes;
  write_file(path, out.dump(2) + "\n");
}

SplitView apply_split(const Dataset& dataset, const SplitConfig& config) {
  dataset.validate();
  config.validate();
  // Every dataset class must fall in exactly one list so the split covers
  // the dataset; id -1 marks "known list position", N_c marks unknown.
  std::unordered_map<int, int> remap;
  for (std::size_t i = 0; i < config.known_classes.size(); ++i) {
    const int id = dataset.class_id(config.known_classes[i]);
    if (id < 0) {
      throw std::invalid_argument("known class '" + config.known_classes[i] +
                                  "' is not in the dataset");
    }
    remap[id] = static_cast<int>(i);
  }
  const int unknown_id = config.unknown_id();
  for (const std::string& c : config.unknown_classes) {
    const int id = dataset.class_id(c);
    if (id < 0) {
      throw std::invalid_argument("unknown class '" + c + "' is not in the dataset");
    }
    remap[id] = unknown_id;
  }
  for (std::size_t i = 0; i < dataset.class_names.size(); ++i) {
    if (!remap.count(static_cast<int>(i))) {
      throw std::invalid_argument("dataset class '" + dataset.class_names[i] +
                                  "' is neither known nor unknown in the split");
    }
  }

  SplitView view;
  view.known_classes = config.known_classes;
  for (const Sample& s : dataset.samples) {
    SplitUnit unit;
    unit.id = s.cloud.id;
    unit.cloud = s.cloud;
    if (dataset.task == "classification") {
      unit.class_id = remap.at(dataset.class_id(s.class_name));
      unit.is_unknown = unit.class_id == unknown_id;
      if (unit.cloud.labels) {
        unit.cloud.labels->assign(unit.cloud.size(), unit.class_id);
      }
      if (!unit.is_unknown && s.split == "train") {
        view.train.push_back(std::move(unit));
      } else {
        view.eval.push_back(std::move(unit));  // held-out knowns + all unknowns
      }
    } else {
      auto& labels = *unit.cloud.labels;
      for (int& l : labels) l = remap.at(l);
      if (s.split == "train") {
        // Simulated unknowns come from augmentation, never the real ones.
        std::vector<geometry::Vec3> kept_coords;
        std::vector<int> kept_labels;
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (labels[i] != unknown_id) {
            kept_coords.push_back(unit.cloud.coords[i]);
            kept_labels.push_back(labels[i]);
          }
        }
        unit.cloud.coords = std::move(kept_coords);
        labels = std::move(kept_labels);
        if (!unit.cloud.coords.empty()) view.train.push_back(std::move(unit));
      } else {
        view.eval.push_back(std::move(unit));
      }
    }
  }
  return view;
}

}  // namespace pointcam::data
