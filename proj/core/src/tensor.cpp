#include "pointcam/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace pointcam::autodiff {

namespace {

std::atomic<bool> g_debug_checks{false};

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) {
      throw std::invalid_argument("tensor dimension must be positive, got " +
                                  std::to_string(d));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

void set_debug_checks(bool enabled) { g_debug_checks.store(enabled); }
bool debug_checks_enabled() { return g_debug_checks.load(); }

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  std::size_t n = element_count(shape);
  node->shape = std::move(shape);
  node->values.assign(n, 0.0);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(n, 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  std::size_t n = element_count(shape);
  if (values.size() != n) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(n, 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

int Tensor::rows() const {
  return node_->shape.empty() ? 1 : node_->shape[0];
}

int Tensor::cols() const {
  if (node_->shape.size() < 2) return 1;
  int c = 1;
  for (std::size_t i = 1; i < node_->shape.size(); ++i) c *= node_->shape[i];
  return c;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_->requires_grad) {
    throw std::logic_error("tensor does not track gradients");
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->values.size(), 0.0);
}

double Tensor::item() const {
  if (node_->values.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " +
                                shape_string(node_->shape));
  }
  return node_->values[0];
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on empty tensor");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                shape_string(loss.shape()));
  }
  detail::TensorNode* root = loss.node();
  if (!root->requires_grad) return;  // no parameters upstream

  // Iterative post-order DFS: children come after all their parents are
  // listed, so reversing gives a valid propagation order from the root.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> visited;
  struct Frame {
    detail::TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& frame = stack.back();
    if (frame.next_parent < frame.node->parents.size()) {
      detail::TensorNode* parent = frame.node->parents[frame.next_parent++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(frame.node);
      stack.pop_back();
    }
  }

  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    if (node->backprop) {
      node->backprop(*node);
      if (debug_checks_enabled()) {
        for (const auto& parent : node->parents) {
          for (double g : parent->grad) {
            if (!std::isfinite(g)) {
              throw std::runtime_error("non-finite gradient during backward");
            }
          }
        }
      }
    }
  }
}

}  // namespace pointcam::autodiff
