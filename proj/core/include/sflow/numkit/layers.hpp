#pragma once

#include <cstddef>
#include <string>

#include "sflow/numkit/autodiff.hpp"
#include "sflow/numkit/random.hpp"

// Layers own parameter *names*; the values live in a ParameterSet so a model
// is a plain value that can be checkpointed and shared read-only.
//
// Weights are initialized uniform in +-sqrt(1/fan_in); biases start at zero.
namespace sflow::numkit::layers {

/// y = x W + b, x: [rows x in].
struct Affine {
  std::string weight;
  std::string bias;
  std::size_t in = 0;
  std::size_t out = 0;

  static Affine create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(const Scope& s, Var x) const;
};

/// Same-padded 1D convolution over time, [T x in] -> [T x out].
struct LocalFusion1D {
  std::string weight;
  std::string bias;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;

  static LocalFusion1D create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                              std::size_t kernel, Rng& rng);
  Var operator()(const Scope& s, Var x) const;
};

/// Depthwise KxK convolution followed by a 1x1 plane mix, [P x H x W] -> [Q x H x W].
struct DepthwiseSeparable2D {
  std::string depthwise_weight;
  std::string depthwise_bias;
  std::string pointwise_weight;
  std::string pointwise_bias;
  std::size_t planes_in = 0;
  std::size_t planes_out = 0;
  std::size_t kernel = 0;

  static DepthwiseSeparable2D create(ParameterSet& params, const std::string& name, std::size_t planes_in,
                                     std::size_t planes_out, std::size_t kernel, Rng& rng);
  Var operator()(const Scope& s, Var x) const;
};

struct LayerNorm {
  std::string gain;
  std::string bias;
  std::size_t width = 0;

  static LayerNorm create(ParameterSet& params, const std::string& name, std::size_t width);
  Var operator()(const Scope& s, Var x) const;
};

/// Single-head scaled dot-product self-attention over the rows of [T x width].
struct Attention {
  Affine query;
  Affine key;
  Affine value;
  Affine output;
  std::size_t width = 0;

  static Attention create(ParameterSet& params, const std::string& name, std::size_t width, Rng& rng);
  Var operator()(const Scope& s, Var x) const;
};

/// Gated recurrent cell (GRU form):
///   z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br)
///   n = tanh(x Wn + (r*h) Un + bn), h' = n + z*(h - n)
struct RecurrentCell {
  std::string input_weight;    // [in x 3h], columns z | r | n
  std::string input_bias;      // [3h]
  std::string gate_weight;     // [h x 2h], columns z | r
  std::string candidate_weight;  // [h x h]
  std::size_t in = 0;
  std::size_t hidden = 0;

  static RecurrentCell create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                              Rng& rng);
  /// Runs over the rows of x in order (or reversed) and returns the hidden
  /// states aligned with the input rows, [T x hidden].
  Var run(const Scope& s, Var x, bool reverse) const;
};

/// Recurrent cell run forward and backward over time; outputs concatenated, [T x 2*hidden].
struct BiRecurrent {
  RecurrentCell forward;
  RecurrentCell backward;

  static BiRecurrent create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                            Rng& rng);
  std::size_t out() const { return forward.hidden * 2; }
  Var operator()(const Scope& s, Var x) const;
};

}  // namespace sflow::numkit::layers
