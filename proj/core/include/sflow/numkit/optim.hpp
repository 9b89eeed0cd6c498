#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sflow/numkit/autodiff.hpp"

namespace sflow::numkit {

enum class ScheduleKind { kWarmupCosine, kConstant };

struct AdamWConfig {
  double peak_lr = 2e-5;
  std::uint64_t warmup_steps = 5000;
  std::uint64_t total_steps = 500000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  ScheduleKind schedule = ScheduleKind::kWarmupCosine;
};

/// Learning rate at `step`: linear ramp from 0 to `peak` over [0, warmup],
/// then cosine annealing from `peak` to 0 over (warmup, total].
/// Throws std::out_of_range when step > total or warmup >= total.
double lr_at(std::uint64_t step, double peak, std::uint64_t warmup_steps, std::uint64_t total_steps);

struct OptimizerState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;

  double current_lr() const;
};

/// One bias-corrected AdamW update with decoupled weight decay, using the
/// learning rate for the state's current step. Parameters without an entry
/// in `grads` are left untouched.
void adamw_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state);

}  // namespace sflow::numkit
