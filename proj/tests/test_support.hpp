// Shared helpers for the test binaries: random inputs and scratch dirs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pointcam/geometry.hpp"
#include "pointcam/metrics.hpp"
#include "pointcam/rng.hpp"

namespace test_support {

inline pointcam::geometry::PointCloud random_cloud(int n, std::uint64_t seed,
                                                   int num_classes = 0,
                                                   double extent = 1.0) {
  pointcam::Rng rng(seed);
  pointcam::geometry::PointCloud cloud;
  cloud.id = "cloud_" + std::to_string(seed);
  if (num_classes > 0) cloud.labels.emplace();
  for (int i = 0; i < n; ++i) {
    cloud.coords.push_back({rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                            rng.uniform(-extent, extent)});
    if (num_classes > 0) cloud.labels->push_back(rng.uniform_int(num_classes));
  }
  return cloud;
}

/// Random score dump with both classes guaranteed and a controllable rate
/// of exact ties (scores drawn from a small grid when tie_grid > 0).
inline std::vector<pointcam::metrics::ScoreRecord> random_dump(int n, std::uint64_t seed,
                                                               int tie_grid = 0) {
  pointcam::Rng rng(seed);
  std::vector<pointcam::metrics::ScoreRecord> dump;
  for (int i = 0; i < n; ++i) {
    double score = tie_grid > 0
                       ? static_cast<double>(rng.uniform_int(tie_grid)) / tie_grid
                       : rng.uniform();
    dump.push_back({"u" + std::to_string(i), score, rng.uniform() < 0.4});
  }
  dump[0].is_unknown = false;
  dump[n - 1].is_unknown = true;
  return dump;
}

/// Fresh scratch directory under the system temp dir; removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("pointcam_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~ScratchDir() { std::filesystem::remove_all(dir_); }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string path(const std::string& name = "") const {
    return name.empty() ? dir_.string() : (dir_ / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::filesystem::path dir_;
};

}  // namespace test_support
