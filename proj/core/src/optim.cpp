#include "pointcam/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pointcam::autodiff {

AdamState make_adam_state(const AdamConfig& config, const std::vector<Tensor>& params) {
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive, got " +
                                std::to_string(config.learning_rate));
  }
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
      config.beta2 >= 1.0) {
    throw std::invalid_argument("Adam decay rates must lie in [0,1)");
  }
  AdamState state;
  state.config = config;
  for (const Tensor& p : params) {
    if (!p.requires_grad()) {
      throw std::invalid_argument("Adam parameter does not track gradients");
    }
    state.first_moment.emplace_back(p.size(), 0.0);
    state.second_moment.emplace_back(p.size(), 0.0);
  }
  return state;
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw std::invalid_argument("Adam state built for " +
                                std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& g = params[p].grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    auto& w = params[p].mutable_values();
    if (g.size() != m.size()) {
      throw std::invalid_argument("Adam parameter " + std::to_string(p) +
                                  " changed size");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      w[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (Tensor& p : params) p.zero_grad();
}

}  // namespace pointcam::autodiff
