#include "pointcam/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pointcam::network {

namespace {

using autodiff::Tensor;

Tensor coords_tensor(const std::vector<geometry::Vec3>& coords) {
  std::vector<double> values;
  values.reserve(coords.size() * 3);
  for (const geometry::Vec3& p : coords) {
    values.push_back(p.x);
    values.push_back(p.y);
    values.push_back(p.z);
  }
  return Tensor::from_values({static_cast<int>(coords.size()), 3}, std::move(values));
}

}  // namespace

void BackboneConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("backbone needs at least one level");
  if (static_cast<int>(channels.size()) != levels ||
      static_cast<int>(level_divisors.size()) != levels) {
    throw std::invalid_argument("backbone: channels and level_divisors must list one "
                                "entry per level");
  }
  for (int c : channels) {
    if (c < 1) throw std::invalid_argument("backbone: channel width must be positive");
  }
  if (level_divisors[0] < 1) {
    throw std::invalid_argument("backbone: level divisors must be >= 1");
  }
  for (int j = 1; j < levels; ++j) {
    if (level_divisors[j] < level_divisors[j - 1]) {
      throw std::invalid_argument("backbone: level divisors must be non-decreasing");
    }
  }
  if (num_known_classes < 1) {
    throw std::invalid_argument("backbone: need at least one known class");
  }
  if (head_hidden < 1) throw std::invalid_argument("backbone: head_hidden must be positive");
}

void UpeConfig::validate() const {
  if (!enabled) return;
  if (hidden < 1) throw std::invalid_argument("estimator hidden width must be positive");
  if (alpha < 0.0) {
    throw std::invalid_argument("estimator loss weight must be non-negative, got " +
                                std::to_string(alpha));
  }
}

Tensor upsample_features(const Tensor& level_features,
                         const std::vector<geometry::Vec3>& level_coords,
                         const std::vector<geometry::Vec3>& full_coords) {
  if (!level_features.defined() || level_features.rows() == 0) {
    throw std::invalid_argument("upsample_features: empty feature map");
  }
  if (static_cast<std::size_t>(level_features.rows()) != level_coords.size()) {
    throw std::invalid_argument("upsample_features: " +
                                std::to_string(level_features.rows()) +
                                " feature rows for " +
                                std::to_string(level_coords.size()) + " points");
  }
  std::vector<int> nearest(full_coords.size(), 0);
  for (std::size_t i = 0; i < full_coords.size(); ++i) {
    double best = geometry::squared_distance(full_coords[i], level_coords[0]);
    int best_j = 0;
    for (std::size_t j = 1; j < level_coords.size(); ++j) {
      const double d = geometry::squared_distance(full_coords[i], level_coords[j]);
      if (d < best) {
        best = d;
        best_j = static_cast<int>(j);
      }
    }
    nearest[i] = best_j;
  }
  return autodiff::gather_rows(level_features, nearest);
}

Model::Linear Model::make_linear(int in, int out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> values(static_cast<std::size_t>(in) * out);
  for (double& v : values) v = rng.uniform(-limit, limit);
  Linear layer;
  layer.weight = Tensor::from_values({in, out}, std::move(values), true);
  layer.bias = Tensor::zeros({1, out}, true);
  return layer;
}

Tensor Model::apply_linear(const Linear& layer, const Tensor& x) {
  return autodiff::add(autodiff::matmul(x, layer.weight), layer.bias);
}

Model::Model(BackboneConfig backbone, UpeConfig upe, Rng& rng)
    : backbone_(std::move(backbone)), upe_(std::move(upe)) {
  backbone_.validate();
  upe_.validate();
  int in = 3;
  for (int j = 0; j < backbone_.levels; ++j) {
    levels_.push_back(make_linear(in, backbone_.channels[j], rng));
    in = backbone_.channels[j];
  }
  // Classification head reads the pooled level-M feature; segmentation
  // additionally concatenates every upsampled per-point map.
  int head_in = backbone_.channels.back();
  if (backbone_.head == TaskHead::segmentation) {
    for (int c : backbone_.channels) head_in += c;
  }
  head_hidden_ = make_linear(head_in, backbone_.head_hidden, rng);
  head_out_ = make_linear(backbone_.head_hidden, backbone_.num_logits(), rng);
  if (upe_.enabled) {
    for (int j = 0; j < backbone_.levels; ++j) {
      phi_hidden_.push_back(make_linear(backbone_.channels[j], upe_.hidden, rng));
      phi_out_.push_back(make_linear(upe_.hidden, 1, rng));
    }
    const int psi_in = 3 + (upe_.psi_uses_features ? backbone_.channels[0] : 0);
    psi_hidden_ = make_linear(psi_in, upe_.hidden, rng);
    psi_out_ = make_linear(upe_.hidden, backbone_.levels, rng);
  }
}

EncodeResult Model::encode(const std::vector<geometry::Vec3>& coords) const {
  const int n = static_cast<int>(coords.size());
  if (n < 1 || n / backbone_.level_divisors.back() < 1) {
    throw std::invalid_argument("cloud of " + std::to_string(n) +
                                " points is too small for level divisor " +
                                std::to_string(backbone_.level_divisors.back()));
  }
  EncodeResult result;
  Tensor features = coords_tensor(coords);
  std::vector<geometry::Vec3> level_coords = coords;
  for (int j = 0; j < backbone_.levels; ++j) {
    const int target = n / backbone_.level_divisors[j];
    if (target < static_cast<int>(level_coords.size())) {
      geometry::PointCloud cloud;
      cloud.coords = level_coords;
      const std::vector<int> keep = geometry::farthest_point_sample(cloud, target, 0);
      features = autodiff::gather_rows(features, keep);
      std::vector<geometry::Vec3> kept;
      kept.reserve(keep.size());
      for (int idx : keep) kept.push_back(level_coords[idx]);
      level_coords = std::move(kept);
    }
    features = autodiff::relu(apply_linear(levels_[j], features));
    result.features.push_back(features);
    result.coords.push_back(level_coords);
  }
  return result;
}

std::pair<Tensor, Tensor> Model::upe_forward(
    const std::vector<geometry::Vec3>& coords,
    const std::vector<Tensor>& full_res_features) const {
  if (!upe_.enabled) throw std::logic_error("estimator is disabled in this model");
  const int n = static_cast<int>(coords.size());
  const int m = backbone_.levels;
  if (static_cast<int>(full_res_features.size()) != m) {
    throw std::invalid_argument("expected " + std::to_string(m) +
                                " feature maps, got " +
                                std::to_string(full_res_features.size()));
  }
  std::vector<Tensor> level_scores;
  for (int j = 0; j < m; ++j) {
    const Tensor& f = full_res_features[j];
    if (f.rows() != n || f.cols() != backbone_.channels[j]) {
      throw std::invalid_argument("feature map " + std::to_string(j) +
                                  " has shape " + autodiff::shape_string(f.shape()));
    }
    Tensor h = autodiff::relu(apply_linear(phi_hidden_[j], f));
    level_scores.push_back(autodiff::sigmoid(apply_linear(phi_out_[j], h)));
  }
  const Tensor scores = autodiff::concat_cols(level_scores);  // N x M

  Tensor weights;
  if (upe_.point_guided) {
    Tensor psi_in = coords_tensor(coords);
    if (upe_.psi_uses_features) {
      psi_in = autodiff::concat_cols({psi_in, full_res_features[0]});
    }
    Tensor h = autodiff::relu(apply_linear(psi_hidden_, psi_in));
    weights = autodiff::row_softmax(apply_linear(psi_out_, h));
  } else {
    weights = Tensor::from_values(
        {n, m}, std::vector<double>(static_cast<std::size_t>(n) * m,
                                    1.0 / static_cast<double>(m)));
  }
  const Tensor ones = Tensor::from_values({m, 1}, std::vector<double>(m, 1.0));
  Tensor fused = autodiff::matmul(autodiff::mul(weights, scores), ones);
  return {fused, weights};
}

ForwardOutput Model::forward(const std::vector<geometry::Vec3>& coords) const {
  const EncodeResult enc = encode(coords);
  const int n = static_cast<int>(coords.size());

  std::vector<Tensor> full_res;
  const bool need_full_res =
      upe_.enabled || backbone_.head == TaskHead::segmentation;
  if (need_full_res) {
    for (int j = 0; j < backbone_.levels; ++j) {
      if (static_cast<int>(enc.coords[j].size()) == n) {
        full_res.push_back(enc.features[j]);  // level kept every point
      } else {
        full_res.push_back(upsample_features(enc.features[j], enc.coords[j], coords));
      }
    }
  }

  ForwardOutput out;
  const Tensor global = autodiff::max_over_rows(enc.features.back());
  if (backbone_.head == TaskHead::classification) {
    const Tensor h = autodiff::relu(apply_linear(head_hidden_, global));
    out.logits = apply_linear(head_out_, h);
  } else {
    std::vector<Tensor> parts = full_res;
    parts.push_back(autodiff::tile_rows(global, n));
    const Tensor h = autodiff::relu(apply_linear(head_hidden_, autodiff::concat_cols(parts)));
    out.logits = apply_linear(head_out_, h);
  }
  if (upe_.enabled) {
    auto [fused, weights] = upe_forward(coords, full_res);
    out.upe_scores = fused;
    out.fusion_weights = weights;
  }
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> params;
  for (const auto& nt : named_parameters()) params.push_back(nt.tensor);
  return params;
}

std::vector<autodiff::NamedTensor> Model::named_parameters() const {
  std::vector<autodiff::NamedTensor> named;
  auto push = [&named](const std::string& name, const Linear& layer) {
    named.push_back({name + ".weight", layer.weight});
    named.push_back({name + ".bias", layer.bias});
  };
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    push("backbone.level" + std::to_string(j), levels_[j]);
  }
  push("head.hidden", head_hidden_);
  push("head.out", head_out_);
  if (upe_.enabled) {
    for (std::size_t j = 0; j < phi_hidden_.size(); ++j) {
      push("upe.phi" + std::to_string(j) + ".hidden", phi_hidden_[j]);
      push("upe.phi" + std::to_string(j) + ".out", phi_out_[j]);
    }
    push("upe.psi.hidden", psi_hidden_);
    push("upe.psi.out", psi_out_);
  }
  return named;
}

void Model::load_parameters(
    const std::map<std::string, autodiff::CheckpointEntry>& entries) {
  const auto named = named_parameters();
  if (entries.size() != named.size()) {
    throw std::runtime_error("checkpoint holds " + std::to_string(entries.size()) +
                             " parameters, model expects " +
                             std::to_string(named.size()));
  }
  for (const auto& nt : named) {
    const auto it = entries.find(nt.name);
    if (it == entries.end()) {
      throw std::runtime_error("checkpoint is missing parameter '" + nt.name + "'");
    }
    if (it->second.shape != nt.tensor.shape()) {
      throw std::runtime_error("parameter '" + nt.name + "' has shape " +
                               autodiff::shape_string(it->second.shape) +
                               " in the checkpoint, expected " +
                               autodiff::shape_string(nt.tensor.shape()));
    }
    Tensor t = nt.tensor;
    t.mutable_values() = it->second.values;
  }
}

LossParts total_loss(const ForwardOutput& output, const std::vector<int>& labels,
                     const std::vector<double>& ref_scores, double alpha) {
  if (alpha < 0.0) {
    throw std::invalid_argument("loss weight must be non-negative, got " +
                                std::to_string(alpha));
  }
  LossParts parts;
  parts.task = autodiff::cross_entropy(output.logits, labels);
  if (output.upe_scores.defined()) {
    const int n = output.upe_scores.rows();
    if (static_cast<int>(ref_scores.size()) != n) {
      throw std::invalid_argument("expected " + std::to_string(n) +
                                  " reference scores, got " +
                                  std::to_string(ref_scores.size()));
    }
    const Tensor refs = Tensor::from_values({n, 1}, ref_scores);
    parts.upe = autodiff::mse(output.upe_scores, refs);
    parts.total = alpha == 0.0 ? parts.task
                               : autodiff::add(parts.task, autodiff::scale(parts.upe, alpha));
  } else {
    parts.upe = Tensor::scalar(0.0);
    parts.total = parts.task;
  }
  return parts;
}

std::vector<double> msp_scores(const Tensor& logits) {
  const int n = logits.rows();
  const int m = logits.cols();
  const auto& v = logits.values();
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    const double* row = &v[static_cast<std::size_t>(i) * m];
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < m; ++j) denom += std::exp(row[j] - mx);
    scores[i] = 1.0 - 1.0 / denom;  // max softmax prob is exp(0)/denom
  }
  return scores;
}

std::vector<double> maxlogit_scores(const Tensor& logits) {
  const int n = logits.rows();
  const int m = logits.cols();
  const auto& v = logits.values();
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    const double* row = &v[static_cast<std::size_t>(i) * m];
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    scores[i] = -mx;
  }
  return scores;
}

double sample_unknown_score(const std::vector<double>& point_scores) {
  if (point_scores.empty()) {
    throw std::invalid_argument("sample score needs at least one point score");
  }
  double acc = 0.0;
  for (double s : point_scores) acc += s;
  return acc / static_cast<double>(point_scores.size());
}

std::vector<int> known_class_argmax(const Tensor& logits, int num_known) {
  const int n = logits.rows();
  const int m = logits.cols();
  if (num_known < 1 || num_known > m) {
    throw std::invalid_argument("known-class count " + std::to_string(num_known) +
                                " out of range for " + std::to_string(m) + " logits");
  }
  const auto& v = logits.values();
  std::vector<int> pred(n, 0);
  for (int i = 0; i < n; ++i) {
    const double* row = &v[static_cast<std::size_t>(i) * m];
    int best = 0;
    for (int j = 1; j < num_known; ++j) {
      if (row[j] > row[best]) best = j;
    }
    pred[i] = best;
  }
  return pred;
}

}  // namespace pointcam::network
