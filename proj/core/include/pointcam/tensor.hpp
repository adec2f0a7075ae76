#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pointcam::autodiff {

namespace detail {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Propagates this node's grad into the parents' grads. Empty for leaves.
  std::function<void(TensorNode&)> backprop;
};

}  // namespace detail

/// Dense 64-bit tensor handle. Copies share the underlying node, so a
/// parameter tensor held by a model and by an optimizer is one storage.
/// Graphs are built per forward pass and are confined to one thread.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->values.size(); }
  int rows() const;
  int cols() const;
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& values() const { return node_->values; }
  /// Direct write access; meant for optimizer updates and test setup.
  std::vector<double>& mutable_values() { return node_->values; }
  const std::vector<double>& grad() const;
  void zero_grad();

  /// The single element of a scalar tensor.
  double item() const;

  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& shared_node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// Reverse-mode sweep from a scalar loss: topological order over the graph,
/// then each node's backprop rule. Gradients accumulate into .grad() of all
/// reachable requires_grad tensors (call zero_grad between steps).
/// Throws std::invalid_argument if loss is not a scalar.
void backward(const Tensor& loss);

/// When enabled, every op (and backward) screens its outputs for NaN/Inf and
/// throws std::runtime_error naming the op. Off by default.
void set_debug_checks(bool enabled);
bool debug_checks_enabled();

std::string shape_string(const std::vector<int>& shape);

}  // namespace pointcam::autodiff
