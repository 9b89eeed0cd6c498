#include "sflow/numkit/layers.hpp"

#include <cmath>
#include <vector>

#include "sflow/numkit/ops.hpp"

namespace sflow::numkit::layers {

namespace {

Array fan_in_uniform(const Shape& shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  return rng.uniform_array(shape, -bound, bound);
}

}  // namespace

Affine Affine::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  Affine layer{name + ".weight", name + ".bias", in, out};
  params.add(layer.weight, fan_in_uniform({in, out}, in, rng));
  params.add(layer.bias, Array({out}, 0.0));
  return layer;
}

Var Affine::operator()(const Scope& s, Var x) const {
  return ops::add_row(ops::matmul(x, s.param(weight)), s.param(bias));
}

LocalFusion1D LocalFusion1D::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                                    std::size_t kernel, Rng& rng) {
  LocalFusion1D layer{name + ".weight", name + ".bias", in, out, kernel};
  params.add(layer.weight, fan_in_uniform({kernel, in, out}, kernel * in, rng));
  params.add(layer.bias, Array({out}, 0.0));
  return layer;
}

Var LocalFusion1D::operator()(const Scope& s, Var x) const {
  return ops::conv1d(x, s.param(weight), s.param(bias));
}

DepthwiseSeparable2D DepthwiseSeparable2D::create(ParameterSet& params, const std::string& name,
                                                  std::size_t planes_in, std::size_t planes_out, std::size_t kernel,
                                                  Rng& rng) {
  DepthwiseSeparable2D layer{name + ".dw.weight", name + ".dw.bias", name + ".pw.weight", name + ".pw.bias",
                             planes_in,           planes_out,        kernel};
  params.add(layer.depthwise_weight, fan_in_uniform({planes_in, kernel, kernel}, kernel * kernel, rng));
  params.add(layer.depthwise_bias, Array({planes_in}, 0.0));
  params.add(layer.pointwise_weight, fan_in_uniform({planes_in, planes_out}, planes_in, rng));
  params.add(layer.pointwise_bias, Array({planes_out}, 0.0));
  return layer;
}

Var DepthwiseSeparable2D::operator()(const Scope& s, Var x) const {
  Var spatial = ops::depthwise_conv2d(x, s.param(depthwise_weight), s.param(depthwise_bias));
  return ops::pointwise_conv2d(spatial, s.param(pointwise_weight), s.param(pointwise_bias));
}

LayerNorm LayerNorm::create(ParameterSet& params, const std::string& name, std::size_t width) {
  LayerNorm layer{name + ".gain", name + ".bias", width};
  params.add(layer.gain, Array({width}, 1.0));
  params.add(layer.bias, Array({width}, 0.0));
  return layer;
}

Var LayerNorm::operator()(const Scope& s, Var x) const {
  return ops::layer_norm_rows(x, s.param(gain), s.param(bias));
}

Attention Attention::create(ParameterSet& params, const std::string& name, std::size_t width, Rng& rng) {
  Attention layer;
  layer.query = Affine::create(params, name + ".query", width, width, rng);
  layer.key = Affine::create(params, name + ".key", width, width, rng);
  layer.value = Affine::create(params, name + ".value", width, width, rng);
  layer.output = Affine::create(params, name + ".output", width, width, rng);
  layer.width = width;
  return layer;
}

Var Attention::operator()(const Scope& s, Var x) const {
  Var q = query(s, x);
  Var k = key(s, x);
  Var v = value(s, x);
  Var logits = ops::scale(ops::matmul(q, ops::transpose(k)), 1.0 / std::sqrt(static_cast<double>(width)));
  return output(s, ops::matmul(ops::softmax_rows(logits), v));
}

RecurrentCell RecurrentCell::create(ParameterSet& params, const std::string& name, std::size_t in,
                                    std::size_t hidden, Rng& rng) {
  RecurrentCell cell{name + ".input.weight", name + ".input.bias", name + ".gate.weight", name + ".candidate.weight",
                     in, hidden};
  params.add(cell.input_weight, fan_in_uniform({in, 3 * hidden}, in, rng));
  params.add(cell.input_bias, Array({3 * hidden}, 0.0));
  params.add(cell.gate_weight, fan_in_uniform({hidden, 2 * hidden}, hidden, rng));
  params.add(cell.candidate_weight, fan_in_uniform({hidden, hidden}, hidden, rng));
  return cell;
}

Var RecurrentCell::run(const Scope& s, Var x, bool reverse) const {
  const std::size_t steps = x.value().rows();
  Var projected = ops::add_row(ops::matmul(x, s.param(input_weight)), s.param(input_bias));
  Var gate_w = s.param(gate_weight);
  Var cand_w = s.param(candidate_weight);

  Var h = s.constant(Array({1, hidden}, 0.0));
  std::vector<Var> states(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    Var row = ops::slice_rows(projected, t, 1);
    Var gates = ops::sigmoid(ops::add(ops::slice_cols(row, 0, 2 * hidden), ops::matmul(h, gate_w)));
    Var z = ops::slice_cols(gates, 0, hidden);
    Var r = ops::slice_cols(gates, hidden, hidden);
    Var n = ops::tanh(ops::add(ops::slice_cols(row, 2 * hidden, hidden), ops::matmul(ops::mul(r, h), cand_w)));
    h = ops::add(n, ops::mul(z, ops::sub(h, n)));
    states[t] = h;
  }
  return ops::concat_rows(states);
}

BiRecurrent BiRecurrent::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                                Rng& rng) {
  BiRecurrent layer;
  layer.forward = RecurrentCell::create(params, name + ".fwd", in, hidden, rng);
  layer.backward = RecurrentCell::create(params, name + ".bwd", in, hidden, rng);
  return layer;
}

Var BiRecurrent::operator()(const Scope& s, Var x) const {
  return ops::concat_cols({forward.run(s, x, false), backward.run(s, x, true)});
}

}  // namespace sflow::numkit::layers
