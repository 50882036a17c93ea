#include "strokenet/optim.hpp"

#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet::ad {

void AdamState::init(const std::vector<Tensor>& params) {
  m.clear();
  v.clear();
  step_count = 0;
  for (const Tensor& p : params) {
    m.emplace_back(p.size(), 0.0);
    v.emplace_back(p.size(), 0.0);
  }
}

void adam_step(AdamState& state, std::vector<Tensor>& params) {
  if (state.m.size() != params.size())
    throw ConfigError("adam_step: state holds " + std::to_string(state.m.size()) +
                      " moment buffers for " + std::to_string(params.size()) + " parameters");
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (state.m[i].size() != p.size())
      throw ConfigError("adam_step: moment shape mismatch at parameter " + std::to_string(i));
    const auto& g = p.grad();
    auto& val = p.value();
    auto& mi = state.m[i];
    auto& vi = state.v[i];
    for (std::size_t j = 0; j < val.size(); ++j) {
      mi[j] = state.beta1 * mi[j] + (1.0 - state.beta1) * g[j];
      vi[j] = state.beta2 * vi[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = mi[j] / bc1;
      const double v_hat = vi[j] / bc2;
      val[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double cosine_lr(std::int64_t step, std::int64_t total, double lr0, double lr_min) {
  if (total <= 0 || step >= total) return lr_min;
  if (step < 0) step = 0;
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(3.141592653589793 * frac));
}

}  // namespace strokenet::ad
