#pragma once

#include <cstddef>
#include <vector>

#include "sflow/numkit/autodiff.hpp"

// Differentiable primitives. Matrices are rank-2 [rows x cols]; 2D feature
// planes are rank-3 [planes x height x width].
namespace sflow::numkit::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

/// x[r, :] + bias for every row r.
Var add_row(Var x, Var bias);
Var matmul(Var a, Var b);
Var transpose(Var a);

Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);
Var silu(Var x);
Var square(Var x);

Var softmax_rows(Var x);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
/// out[i, :] = x[indices[i], :]. Embedding lookup and length regulation.
Var gather_rows(Var x, const std::vector<std::size_t>& indices);
Var reshape(Var x, Shape shape);

/// 1D convolution along rows with zero "same" padding.
/// x: [T x Cin], weight: [K x Cin x Cout], bias: [Cout], K odd.
Var conv1d(Var x, Var weight, Var bias);

/// Per-plane KxK convolution with zero "same" padding.
/// x: [P x H x W], weight: [P x K x K], bias: [P], K odd.
Var depthwise_conv2d(Var x, Var weight, Var bias);

/// 1x1 convolution mixing planes. x: [P x H x W], weight: [P x Q], bias: [Q].
Var pointwise_conv2d(Var x, Var weight, Var bias);

/// Normalize each row to zero mean / unit variance, then gain and bias per column.
Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);

/// Normalize each column over the rows (per-channel statistics over time).
Var instance_norm_cols(Var x, double eps = 1e-5);

Var sum(Var x);
Var mean(Var x);

}  // namespace sflow::numkit::ops
