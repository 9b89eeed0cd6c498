#include "sflow/couplings/mlp_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sflow/numkit/ops.hpp"
#include "sflow/numkit/optim.hpp"

namespace sflow::couplings {

namespace ops = numkit::ops;

MlpField::MlpField(std::size_t dim, std::size_t width, std::size_t hidden_layers, std::uint64_t seed) : dim_(dim) {
  if (dim == 0 || width == 0 || hidden_layers == 0) throw std::invalid_argument("MlpField: sizes must be positive");
  Rng rng(seed);
  std::size_t in = dim + 1;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    layers_.push_back(numkit::layers::Affine::create(params_, "mlp.hidden" + std::to_string(i), in, width, rng));
    in = width;
  }
  layers_.push_back(numkit::layers::Affine::create(params_, "mlp.out", in, dim, rng));
}

numkit::Var MlpField::forward(const numkit::Scope& s, numkit::Var states, numkit::Var times) const {
  numkit::Var h = ops::concat_cols({states, times});
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = ops::silu(layers_[i](s, h));
  return layers_.back()(s, h);
}

Array MlpField::direction(const Array& state, double t, const flowcore::Conditioning&) const {
  const bool single = state.rank() == 1;
  Array batch = single ? state.reshaped({1, state.size()}) : state;
  if (batch.cols() != dim_) throw std::invalid_argument("MlpField: state width does not match field dimension");
  numkit::Tape tape;
  numkit::Scope s{tape, params_};
  numkit::Var out = forward(s, tape.constant(std::move(batch)), tape.constant(Array({single ? 1 : state.rows(), 1}, t)));
  return single ? out.value().reshaped(state.shape()) : out.value();
}

std::vector<double> train_flow_matching(MlpField& field, const CouplingSet& coupling, const FmTrainConfig& config) {
  if (coupling.size() == 0) throw std::invalid_argument("train_flow_matching: empty coupling");
  Rng rng(config.seed);
  numkit::OptimizerState opt;
  opt.config.peak_lr = config.peak_lr;
  opt.config.warmup_steps = std::min<std::uint64_t>(config.warmup_steps, config.steps / 5);  // short runs
  opt.config.total_steps = config.steps;
  opt.config.weight_decay = config.weight_decay;

  const std::size_t dim = field.dim();
  std::vector<double> losses;
  losses.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    Array h0({config.batch, dim}), h1({config.batch, dim}), ht({config.batch, dim}), times({config.batch, 1});
    for (std::size_t b = 0; b < config.batch; ++b) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(coupling.size() - 1)));
      const double t = rng.uniform();
      times[b] = t;
      const Array& x0 = coupling.initials[i];
      const Array& x1 = coupling.intended_target(i);
      for (std::size_t d = 0; d < dim; ++d) {
        h0.at(b, d) = x0[d];
        h1.at(b, d) = x1[d];
        ht.at(b, d) = t * x1[d] + (1.0 - t) * x0[d];
      }
    }
    numkit::Tape tape;
    numkit::Scope s{tape, field.params()};
    numkit::Var pred = field.forward(s, tape.constant(std::move(ht)), tape.constant(std::move(times)));
    numkit::Var loss = flowcore::graph::fm_loss(pred, tape.constant(std::move(h0)), tape.constant(std::move(h1)));
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw numkit::NumericError("train_flow_matching: non-finite loss at step " + std::to_string(step));
    losses.push_back(value);
    numkit::adamw_step(field.params(), tape.backward(loss), opt);
  }
  return losses;
}

}  // namespace sflow::couplings
