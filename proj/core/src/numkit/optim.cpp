#include "sflow/numkit/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sflow::numkit {

double lr_at(std::uint64_t step, double peak, std::uint64_t warmup_steps, std::uint64_t total_steps) {
  if (warmup_steps >= total_steps) {
    throw std::out_of_range("lr_at: warmup_steps (" + std::to_string(warmup_steps) + ") must be below total_steps (" +
                            std::to_string(total_steps) + ")");
  }
  if (step > total_steps) {
    throw std::out_of_range("lr_at: step " + std::to_string(step) + " beyond total_steps " +
                            std::to_string(total_steps));
  }
  if (step <= warmup_steps) {
    if (warmup_steps == 0) return peak;
    return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double OptimizerState::current_lr() const {
  if (config.schedule == ScheduleKind::kConstant) return config.peak_lr;
  return lr_at(step, config.peak_lr, config.warmup_steps, config.total_steps);
}

void adamw_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw std::invalid_argument("adamw_step: gradient for unknown parameter '" + name + "'");
    require_same_shape(params.get(name), g, ("adamw_step(" + name + ")").c_str());
  }

  const auto& cfg = state.config;
  const double lr = state.current_lr();
  const auto t = static_cast<double>(state.step + 1);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);

  for (const auto& [name, g] : grads) {
    Array& theta = params.get(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Array(theta.shape(), 0.0));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Array(theta.shape(), 0.0));
    Array& m = m_it->second;
    Array& v = v_it->second;
    require_same_shape(theta, m, "adamw_step(first moment)");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) + cfg.weight_decay * theta[i]);
    }
  }
  ++state.step;
}

}  // namespace sflow::numkit
