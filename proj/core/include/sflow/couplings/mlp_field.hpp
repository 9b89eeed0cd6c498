#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sflow/couplings/couplings.hpp"
#include "sflow/flowcore/flow.hpp"
#include "sflow/numkit/autodiff.hpp"
#include "sflow/numkit/layers.hpp"

namespace sflow::couplings {

/// Perceptron direction field for point clouds: [x, t] -> direction, SiLU hidden layers.
class MlpField final : public flowcore::FlowField {
 public:
  MlpField(std::size_t dim, std::size_t width, std::size_t hidden_layers, std::uint64_t seed);

  /// states: [N x dim], times: [N x 1].
  numkit::Var forward(const numkit::Scope& s, numkit::Var states, numkit::Var times) const;

  /// Accepts a single state [dim] or a batch [N x dim].
  Array direction(const Array& state, double t, const flowcore::Conditioning& cond) const override;

  numkit::ParameterSet& params() { return params_; }
  const numkit::ParameterSet& params() const { return params_; }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::vector<numkit::layers::Affine> layers_;
  numkit::ParameterSet params_;
};

struct FmTrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 256;
  double peak_lr = 2e-3;
  std::uint64_t warmup_steps = 100;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

/// Flow matching on the coupling's pairs with t ~ U[0, 1]. Returns the loss per step.
std::vector<double> train_flow_matching(MlpField& field, const CouplingSet& coupling, const FmTrainConfig& config);

}  // namespace sflow::couplings
