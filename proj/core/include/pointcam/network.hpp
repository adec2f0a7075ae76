#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pointcam/checkpoint.hpp"
#include "pointcam/geometry.hpp"
#include "pointcam/ops.hpp"
#include "pointcam/rng.hpp"
#include "pointcam/tensor.hpp"

namespace pointcam::network {

enum class TaskHead { segmentation, classification };

/// Shared-MLP encoder over M levels. Level j applies a per-point linear +
/// relu at width channels[j], then the next level keeps every
/// level_divisors[j+1]/level_divisors[j]-th of the points via farthest-point
/// sampling. Defaults give resolutions N, N/2, N/4.
struct BackboneConfig {
  int levels = 3;
  std::vector<int> channels = {64, 128, 256};
  std::vector<int> level_divisors = {1, 2, 4};
  int num_known_classes = 0;
  TaskHead head = TaskHead::classification;
  // Reserves one extra logit column for the simulated-unknown class. On
  // whenever mix augmentation is on; off reproduces a plain closed-set net.
  bool unknown_logit = true;
  int head_hidden = 64;

  void validate() const;
  int num_logits() const { return num_known_classes + (unknown_logit ? 1 : 0); }
};

/// Multi-level score estimator: per-level scorers phi_j (feature -> score in
/// (0,1)) fused by coordinate-driven softmax weights from psi.
struct UpeConfig {
  bool enabled = true;
  int hidden = 64;
  double alpha = 1.0;
  // Off replaces the learned weights with a constant 1/M (ablation wiring).
  bool point_guided = true;
  // Feeds level-1 features to psi alongside the raw coordinates.
  bool psi_uses_features = false;

  void validate() const;
};

struct EncodeResult {
  std::vector<autodiff::Tensor> features;           // H_j, shape N_j x C_j
  std::vector<std::vector<geometry::Vec3>> coords;  // retained points per level
};

struct ForwardOutput {
  autodiff::Tensor logits;  // N x num_logits (segmentation) or 1 x num_logits
  autodiff::Tensor upe_scores;      // N x 1, empty when the estimator is off
  autodiff::Tensor fusion_weights;  // N x M, empty when the estimator is off
};

/// Nearest-neighbor feature upsampling: every full-resolution point takes
/// the feature row of its closest retained point (ties to the lower index).
/// Differentiable through the row gather.
autodiff::Tensor upsample_features(const autodiff::Tensor& level_features,
                                   const std::vector<geometry::Vec3>& level_coords,
                                   const std::vector<geometry::Vec3>& full_coords);

class Model {
 public:
  /// Glorot-uniform weights, zero biases, drawn from rng in a fixed order
  /// (backbone levels, task head, then estimator), so one seed pins the
  /// whole initialization.
  Model(BackboneConfig backbone, UpeConfig upe, Rng& rng);

  EncodeResult encode(const std::vector<geometry::Vec3>& coords) const;

  ForwardOutput forward(const std::vector<geometry::Vec3>& coords) const;

  /// Score fusion on externally supplied per-level full-resolution features:
  /// scores_j = sigmoid(phi_j(F_j)), weights = softmax(psi(Q)) row-wise,
  /// fused = sum_j weights_j * scores_j. Returns (fused N x 1, weights N x M).
  std::pair<autodiff::Tensor, autodiff::Tensor> upe_forward(
      const std::vector<geometry::Vec3>& coords,
      const std::vector<autodiff::Tensor>& full_res_features) const;

  std::vector<autodiff::Tensor> parameters() const;
  std::vector<autodiff::NamedTensor> named_parameters() const;
  /// Loads values by name; throws std::runtime_error on a missing name or a
  /// shape mismatch.
  void load_parameters(const std::map<std::string, autodiff::CheckpointEntry>& entries);

  const BackboneConfig& backbone_config() const { return backbone_; }
  const UpeConfig& upe_config() const { return upe_; }

 private:
  struct Linear {
    autodiff::Tensor weight;  // in x out
    autodiff::Tensor bias;    // 1 x out
  };
  static Linear make_linear(int in, int out, Rng& rng);
  static autodiff::Tensor apply_linear(const Linear& layer, const autodiff::Tensor& x);

  BackboneConfig backbone_;
  UpeConfig upe_;
  std::vector<Linear> levels_;
  Linear head_hidden_;
  Linear head_out_;
  std::vector<Linear> phi_hidden_;
  std::vector<Linear> phi_out_;
  Linear psi_hidden_;
  Linear psi_out_;
};

struct LossParts {
  autodiff::Tensor total;
  autodiff::Tensor task;
  autodiff::Tensor upe;  // raw MSE before the alpha weight
};

/// total = cross_entropy(logits, labels) + alpha * mean((scores - refs)^2).
/// labels: one id per logit row. refs: one target per point, required when
/// the output carries estimator scores; alpha = 0 keeps total == task.
LossParts total_loss(const ForwardOutput& output, const std::vector<int>& labels,
                     const std::vector<double>& ref_scores, double alpha);

/// Per-row unknown scores, higher = more unknown.
std::vector<double> msp_scores(const autodiff::Tensor& logits);       // 1 - max softmax
std::vector<double> maxlogit_scores(const autodiff::Tensor& logits);  // -max logit

/// Mean of the per-point fused scores: the sample-level unknown score.
double sample_unknown_score(const std::vector<double>& point_scores);

/// Per-row argmax over the first num_known columns (closed-set prediction).
std::vector<int> known_class_argmax(const autodiff::Tensor& logits, int num_known);

}  // namespace pointcam::network
