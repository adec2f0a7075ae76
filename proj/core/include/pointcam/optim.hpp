#pragma once

#include <cstdint>
#include <vector>

#include "pointcam/tensor.hpp"

namespace pointcam::autodiff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moment buffers plus the shared step counter.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

AdamState make_adam_state(const AdamConfig& config, const std::vector<Tensor>& params);

/// One Adam update with bias correction, reading each parameter's current
/// gradient. Parameter order must match the make_adam_state call.
void adam_step(std::vector<Tensor>& params, AdamState& state);

void zero_grads(std::vector<Tensor>& params);

}  // namespace pointcam::autodiff
