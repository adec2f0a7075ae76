#pragma once

#include <map>
#include <string>
#include <vector>

#include "pointcam/tensor.hpp"

namespace pointcam::autodiff {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Binary weight file, little-endian throughout:
///
///   8 bytes   magic "PCAMCKPT"
///   u32       format version (currently 1)
///   u32       parameter count
///   per parameter, in the order given:
///     u32       name length, then that many UTF-8 bytes
///     u32       rank, then rank u32 dims
///     binary64  values, row-major
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& params);

struct CheckpointEntry {
  std::vector<int> shape;
  std::vector<double> values;
};

/// Throws std::runtime_error on a missing file, bad magic, unsupported
/// version, or truncation.
std::map<std::string, CheckpointEntry> load_checkpoint(const std::string& path);

}  // namespace pointcam::autodiff
