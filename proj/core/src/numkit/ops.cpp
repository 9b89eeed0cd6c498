#include "sflow/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sflow::numkit::ops {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
  return tape_of(a);
}

void require_rank(const Array& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                                shape_to_string(a.shape()));
  }
}

template <typename F, typename G>
Var unary(Var x, const char* name, F forward, G derivative) {
  Array out = x.value();
  for (auto& v : out.values()) v = forward(v);
  return tape_of(x).record(std::move(out), {x},
                           [derivative](const BackwardContext& ctx) {
                             Array* gx = ctx.input_grad(0);
                             if (!gx) return;
                             const auto& in = ctx.input_value(0);
                             const auto& y = ctx.out_value();
                             const auto& gy = ctx.out_grad();
                             for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] * derivative(in[i], y[i]);
                           },
                           name);
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m x n] += a[m x k] * b[n x k]^T
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] += s;
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n]
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[p * n + j] += av * b[i * n + j];
    }
  }
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  Array out = a.value() + b.value();
  return tape.record(std::move(out), {a, b},
                     [](const BackwardContext& ctx) {
                       if (Array* g = ctx.input_grad(0)) *g += ctx.out_grad();
                       if (Array* g = ctx.input_grad(1)) *g += ctx.out_grad();
                     },
                     "add");
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  Array out = a.value() - b.value();
  return tape.record(std::move(out), {a, b},
                     [](const BackwardContext& ctx) {
                       if (Array* g = ctx.input_grad(0)) *g += ctx.out_grad();
                       if (Array* g = ctx.input_grad(1)) *g -= ctx.out_grad();
                     },
                     "sub");
}

Var mul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  Array out = hadamard(a.value(), b.value());
  return tape.record(std::move(out), {a, b},
                     [](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       if (Array* g = ctx.input_grad(0)) *g += hadamard(gy, ctx.input_value(1));
                       if (Array* g = ctx.input_grad(1)) *g += hadamard(gy, ctx.input_value(0));
                     },
                     "mul");
}

Var scale(Var a, double s) {
  return tape_of(a).record(a.value() * s, {a},
                           [s](const BackwardContext& ctx) {
                             if (Array* g = ctx.input_grad(0)) *g += ctx.out_grad() * s;
                           },
                           "scale");
}

Var add_scalar(Var a, double s) {
  Array out = a.value();
  for (auto& v : out.values()) v += s;
  return tape_of(a).record(std::move(out), {a},
                           [](const BackwardContext& ctx) {
                             if (Array* g = ctx.input_grad(0)) *g += ctx.out_grad();
                           },
                           "add_scalar");
}

Var add_row(Var x, Var bias) {
  Tape& tape = tape_of(x, bias);
  const auto& xv = x.value();
  const auto& bv = bias.value();
  require_rank(xv, 2, "add_row");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (bv.size() != cols) {
    throw std::invalid_argument("add_row: bias " + shape_to_string(bv.shape()) + " vs input " +
                                shape_to_string(xv.shape()));
  }
  Array out = xv;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bv[c];
  return tape.record(std::move(out), {x, bias},
                     [rows, cols](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       if (Array* g = ctx.input_grad(0)) *g += gy;
                       if (Array* g = ctx.input_grad(1)) {
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) (*g)[c] += gy[r * cols + c];
                       }
                     },
                     "add_row");
}

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_to_string(av.shape()) + " * " +
                                shape_to_string(bv.shape()));
  }
  Array out(Shape{m, n}, 0.0);
  gemm_acc(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return tape.record(std::move(out), {a, b},
                     [m, k, n](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       if (Array* g = ctx.input_grad(0)) {
                         gemm_nt_acc(gy.data().data(), ctx.input_value(1).data().data(), g->data().data(), m, n, k);
                       }
                       if (Array* g = ctx.input_grad(1)) {
                         gemm_tn_acc(ctx.input_value(0).data().data(), gy.data().data(), g->data().data(), m, k, n);
                       }
                     },
                     "matmul");
}

Var transpose(Var a) {
  const auto& av = a.value();
  require_rank(av, 2, "transpose");
  const std::size_t rows = av.rows(), cols = av.cols();
  Array out(Shape{cols, rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(c, r) = av.at(r, c);
  return tape_of(a).record(std::move(out), {a},
                           [rows, cols](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const auto& gy = ctx.out_grad();
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c) (*g)[r * cols + c] += gy[c * rows + r];
                           },
                           "transpose");
}

Var tanh(Var x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return unary(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var silu(Var x) {
  return unary(
      x, "silu", [](double v) { return v / (1.0 + std::exp(-v)); },
      [](double v, double) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 + v * (1.0 - s));
      });
}

Var square(Var x) {
  return unary(
      x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var softmax_rows(Var x) {
  const auto& xv = x.value();
  require_rank(xv, 2, "softmax_rows");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Array out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = xv.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, xv.at(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (out.at(r, c) = std::exp(xv.at(r, c) - mx));
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= z;
  }
  return tape_of(x).record(std::move(out), {x},
                           [rows, cols](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const auto& y = ctx.out_value();
                             const auto& gy = ctx.out_grad();
                             for (std::size_t r = 0; r < rows; ++r) {
                               double dot = 0.0;
                               for (std::size_t c = 0; c < cols; ++c) dot += gy[r * cols + c] * y[r * cols + c];
                               for (std::size_t c = 0; c < cols; ++c) {
                                 (*g)[r * cols + c] += y[r * cols + c] * (gy[r * cols + c] - dot);
                               }
                             }
                           },
                           "softmax_rows");
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& tape = tape_of(parts.front());
  const std::size_t rows = parts.front().value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    tape_of(parts.front(), p);
    require_rank(p.value(), 2, "concat_cols");
    if (p.value().rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Array out(Shape{rows, total});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& pv = parts[i].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < widths[i]; ++c) out.at(r, offset + c) = pv.at(r, c);
    offset += widths[i];
  }
  return tape.record(std::move(out), parts,
                     [rows, total, widths](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       std::size_t off = 0;
                       for (std::size_t i = 0; i < widths.size(); ++i) {
                         if (Array* g = ctx.input_grad(i)) {
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < widths[i]; ++c) (*g)[r * widths[i] + c] += gy[r * total + off + c];
                         }
                         off += widths[i];
                       }
                     },
                     "concat_cols");
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& tape = tape_of(parts.front());
  const std::size_t cols = parts.front().value().cols();
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  std::vector<double> data;
  for (const auto& p : parts) {
    tape_of(parts.front(), p);
    const auto& pv = p.value();
    if (pv.rank() > 2 || pv.cols() != cols) throw std::invalid_argument("concat_rows: column counts differ");
    rows += pv.rows();
    sizes.push_back(pv.size());
    data.insert(data.end(), pv.values().begin(), pv.values().end());
  }
  return tape.record(Array(Shape{rows, cols}, std::move(data)), parts,
                     [sizes](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       std::size_t off = 0;
                       for (std::size_t i = 0; i < sizes.size(); ++i) {
                         if (Array* g = ctx.input_grad(i)) {
                           for (std::size_t j = 0; j < sizes[i]; ++j) (*g)[j] += gy[off + j];
                         }
                         off += sizes[i];
                       }
                     },
                     "concat_rows");
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  const auto& xv = x.value();
  require_rank(xv, 2, "slice_rows");
  if (count == 0 || begin + count > xv.rows()) throw std::out_of_range("slice_rows: range outside input");
  const std::size_t cols = xv.cols();
  std::vector<double> data(xv.values().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           xv.values().begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  return tape_of(x).record(Array(Shape{count, cols}, std::move(data)), {x},
                           [begin, cols](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const auto& gy = ctx.out_grad();
                             for (std::size_t i = 0; i < gy.size(); ++i) (*g)[begin * cols + i] += gy[i];
                           },
                           "slice_rows");
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const auto& xv = x.value();
  require_rank(xv, 2, "slice_cols");
  if (count == 0 || begin + count > xv.cols()) throw std::out_of_range("slice_cols: range outside input");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Array out(Shape{rows, count});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) out.at(r, c) = xv.at(r, begin + c);
  return tape_of(x).record(std::move(out), {x},
                           [rows, cols, begin, count](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const auto& gy = ctx.out_grad();
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < count; ++c) (*g)[r * cols + begin + c] += gy[r * count + c];
                           },
                           "slice_cols");
}

Var gather_rows(Var x, const std::vector<std::size_t>& indices) {
  const auto& xv = x.value();
  require_rank(xv, 2, "gather_rows");
  if (indices.empty()) throw std::invalid_argument("gather_rows: empty index list");
  const std::size_t cols = xv.cols();
  Array out(Shape{indices.size(), cols});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= xv.rows()) throw std::out_of_range("gather_rows: index " + std::to_string(indices[i]));
    for (std::size_t c = 0; c < cols; ++c) out.at(i, c) = xv.at(indices[i], c);
  }
  return tape_of(x).record(std::move(out), {x},
                           [indices, cols](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const auto& gy = ctx.out_grad();
                             for (std::size_t i = 0; i < indices.size(); ++i)
                               for (std::size_t c = 0; c < cols; ++c) (*g)[indices[i] * cols + c] += gy[i * cols + c];
                           },
                           "gather_rows");
}

Var reshape(Var x, Shape shape) {
  Array out = x.value().reshaped(std::move(shape));
  return tape_of(x).record(std::move(out), {x},
                           [](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const auto& gy = ctx.out_grad();
                             for (std::size_t i = 0; i < gy.size(); ++i) (*g)[i] += gy[i];
                           },
                           "reshape");
}

Var conv1d(Var x, Var weight, Var bias) {
  Tape& tape = tape_of(x, weight);
  tape_of(x, bias);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  require_rank(xv, 2, "conv1d");
  require_rank(wv, 3, "conv1d");
  const std::size_t steps = xv.rows(), cin = xv.cols();
  const std::size_t kernel = wv.dim(0), cout = wv.dim(2);
  if (wv.dim(1) != cin || bv.size() != cout || kernel % 2 == 0) {
    throw std::invalid_argument("conv1d: incompatible shapes x" + shape_to_string(xv.shape()) + " w" +
                                shape_to_string(wv.shape()) + " b" + shape_to_string(bv.shape()));
  }
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  Array out(Shape{steps, cout});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t o = 0; o < cout; ++o) out.at(t, o) = bv[o];
    for (std::size_t k = 0; k < kernel; ++k) {
      const auto src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
      gemm_acc(&xv[static_cast<std::size_t>(src) * cin], &wv[k * cin * cout], &out[t * cout], 1, cin, cout);
    }
  }
  return tape.record(
      std::move(out), {x, weight, bias},
      [steps, cin, cout, kernel, half](const BackwardContext& ctx) {
        const auto& gy = ctx.out_grad();
        const auto& xin = ctx.input_value(0);
        const auto& w = ctx.input_value(1);
        Array* gx = ctx.input_grad(0);
        Array* gw = ctx.input_grad(1);
        Array* gb = ctx.input_grad(2);
        for (std::size_t t = 0; t < steps; ++t) {
          if (gb)
            for (std::size_t o = 0; o < cout; ++o) (*gb)[o] += gy[t * cout + o];
          for (std::size_t k = 0; k < kernel; ++k) {
            const auto src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
            const auto s = static_cast<std::size_t>(src);
            if (gx) gemm_nt_acc(&gy[t * cout], &w[k * cin * cout], &(*gx)[s * cin], 1, cout, cin);
            if (gw) gemm_tn_acc(&xin[s * cin], &gy[t * cout], &(*gw)[k * cin * cout], 1, cin, cout);
          }
        }
      },
      "conv1d");
}

Var depthwise_conv2d(Var x, Var weight, Var bias) {
  Tape& tape = tape_of(x, weight);
  tape_of(x, bias);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  require_rank(xv, 3, "depthwise_conv2d");
  require_rank(wv, 3, "depthwise_conv2d");
  const std::size_t planes = xv.dim(0), height = xv.dim(1), width = xv.dim(2);
  const std::size_t kernel = wv.dim(1);
  if (wv.dim(0) != planes || wv.dim(2) != kernel || kernel % 2 == 0 || bv.size() != planes) {
    throw std::invalid_argument("depthwise_conv2d: incompatible shapes x" + shape_to_string(xv.shape()) + " w" +
                                shape_to_string(wv.shape()));
  }
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto h_signed = static_cast<std::ptrdiff_t>(height);
  const auto w_signed = static_cast<std::ptrdiff_t>(width);

  // Calls visit(out_index, in_index, weight_index) for every in-bounds tap.
  auto for_each_tap = [=](auto&& visit) {
    for (std::size_t p = 0; p < planes; ++p)
      for (std::ptrdiff_t i = 0; i < h_signed; ++i)
        for (std::ptrdiff_t j = 0; j < w_signed; ++j) {
          const std::size_t o = (p * height + static_cast<std::size_t>(i)) * width + static_cast<std::size_t>(j);
          for (std::ptrdiff_t u = 0; u < static_cast<std::ptrdiff_t>(kernel); ++u) {
            const auto si = i + u - half;
            if (si < 0 || si >= h_signed) continue;
            for (std::ptrdiff_t v = 0; v < static_cast<std::ptrdiff_t>(kernel); ++v) {
              const auto sj = j + v - half;
              if (sj < 0 || sj >= w_signed) continue;
              const std::size_t in = (p * height + static_cast<std::size_t>(si)) * width + static_cast<std::size_t>(sj);
              const std::size_t wi = (p * kernel + static_cast<std::size_t>(u)) * kernel + static_cast<std::size_t>(v);
              visit(o, in, wi);
            }
          }
        }
  };

  Array out(xv.shape());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t q = 0; q < height * width; ++q) out[p * height * width + q] = bv[p];
  for_each_tap([&](std::size_t o, std::size_t in, std::size_t wi) { out[o] += xv[in] * wv[wi]; });

  return tape.record(std::move(out), {x, weight, bias},
                     [for_each_tap, planes, height, width](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       const auto& xin = ctx.input_value(0);
                       const auto& w = ctx.input_value(1);
                       Array* gx = ctx.input_grad(0);
                       Array* gw = ctx.input_grad(1);
                       Array* gb = ctx.input_grad(2);
                       for_each_tap([&](std::size_t o, std::size_t in, std::size_t wi) {
                         if (gx) (*gx)[in] += gy[o] * w[wi];
                         if (gw) (*gw)[wi] += gy[o] * xin[in];
                       });
                       if (gb) {
                         for (std::size_t p = 0; p < planes; ++p)
                           for (std::size_t q = 0; q < height * width; ++q) (*gb)[p] += gy[p * height * width + q];
                       }
                     },
                     "depthwise_conv2d");
}

Var pointwise_conv2d(Var x, Var weight, Var bias) {
  Tape& tape = tape_of(x, weight);
  tape_of(x, bias);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  require_rank(xv, 3, "pointwise_conv2d");
  require_rank(wv, 2, "pointwise_conv2d");
  const std::size_t planes = xv.dim(0), pixels = xv.dim(1) * xv.dim(2);
  const std::size_t outs = wv.cols();
  if (wv.rows() != planes || bv.size() != outs) {
    throw std::invalid_argument("pointwise_conv2d: incompatible shapes x" + shape_to_string(xv.shape()) + " w" +
                                shape_to_string(wv.shape()));
  }
  Array out(Shape{outs, xv.dim(1), xv.dim(2)});
  for (std::size_t q = 0; q < outs; ++q) {
    double* orow = &out[q * pixels];
    std::fill(orow, orow + pixels, bv[q]);
    for (std::size_t p = 0; p < planes; ++p) {
      const double w = wv.at(p, q);
      const double* xrow = &xv[p * pixels];
      for (std::size_t i = 0; i < pixels; ++i) orow[i] += w * xrow[i];
    }
  }
  return tape.record(std::move(out), {x, weight, bias},
                     [planes, pixels, outs](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       const auto& xin = ctx.input_value(0);
                       const auto& w = ctx.input_value(1);
                       Array* gx = ctx.input_grad(0);
                       Array* gw = ctx.input_grad(1);
                       Array* gb = ctx.input_grad(2);
                       for (std::size_t q = 0; q < outs; ++q) {
                         const double* grow = &gy[q * pixels];
                         if (gb)
                           for (std::size_t i = 0; i < pixels; ++i) (*gb)[q] += grow[i];
                         for (std::size_t p = 0; p < planes; ++p) {
                           if (gx) {
                             const double wpq = w[p * outs + q];
                             for (std::size_t i = 0; i < pixels; ++i) (*gx)[p * pixels + i] += wpq * grow[i];
                           }
                           if (gw) {
                             double s = 0.0;
                             for (std::size_t i = 0; i < pixels; ++i) s += xin[p * pixels + i] * grow[i];
                             (*gw)[p * outs + q] += s;
                           }
                         }
                       }
                     },
                     "pointwise_conv2d");
}

namespace {

// Normalizes `count` groups of `len` elements addressed by index(g, i).
// Returns (normalized, inverse stddev per group).
template <typename Index>
std::pair<Array, std::vector<double>> normalize_groups(const Array& x, std::size_t count, std::size_t len, double eps,
                                                       Index index) {
  Array out(x.shape());
  std::vector<double> inv_std(count);
  for (std::size_t g = 0; g < count; ++g) {
    double mu = 0.0;
    for (std::size_t i = 0; i < len; ++i) mu += x[index(g, i)];
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double d = x[index(g, i)] - mu;
      var += d * d;
    }
    var /= static_cast<double>(len);
    inv_std[g] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < len; ++i) out[index(g, i)] = (x[index(g, i)] - mu) * inv_std[g];
  }
  return {std::move(out), std::move(inv_std)};
}

// dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)) per group.
template <typename Index>
void normalize_backward(const Array& xhat, const Array& dxhat, const std::vector<double>& inv_std, std::size_t len,
                        Array& gx, Index index) {
  const double n = static_cast<double>(len);
  for (std::size_t g = 0; g < inv_std.size(); ++g) {
    double mean_d = 0.0, mean_dx = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      mean_d += dxhat[index(g, i)];
      mean_dx += dxhat[index(g, i)] * xhat[index(g, i)];
    }
    mean_d /= n;
    mean_dx /= n;
    for (std::size_t i = 0; i < len; ++i) {
      const auto k = index(g, i);
      gx[k] += inv_std[g] * (dxhat[k] - mean_d - xhat[k] * mean_dx);
    }
  }
}

}  // namespace

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  Tape& tape = tape_of(x, gain);
  tape_of(x, bias);
  const auto& xv = x.value();
  require_rank(xv, 2, "layer_norm_rows");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().size() != cols || bias.value().size() != cols) {
    throw std::invalid_argument("layer_norm_rows: gain/bias width does not match " + shape_to_string(xv.shape()));
  }
  auto index = [cols](std::size_t g, std::size_t i) { return g * cols + i; };
  auto [xhat, inv_std] = normalize_groups(xv, rows, cols, eps, index);
  Array out = xhat;
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = xhat.at(r, c) * gv[c] + bv[c];
  return tape.record(std::move(out), {x, gain, bias},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std), rows, cols, index](const BackwardContext& ctx) {
                       const auto& gy = ctx.out_grad();
                       const auto& g = ctx.input_value(1);
                       if (Array* gx = ctx.input_grad(0)) {
                         Array dxhat(gy.shape());
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) dxhat[r * cols + c] = gy[r * cols + c] * g[c];
                         normalize_backward(xhat, dxhat, inv_std, cols, *gx, index);
                       }
                       Array* gg = ctx.input_grad(1);
                       Array* gb = ctx.input_grad(2);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < cols; ++c) {
                           if (gg) (*gg)[c] += gy[r * cols + c] * xhat[r * cols + c];
                           if (gb) (*gb)[c] += gy[r * cols + c];
                         }
                     },
                     "layer_norm_rows");
}

Var instance_norm_cols(Var x, double eps) {
  const auto& xv = x.value();
  require_rank(xv, 2, "instance_norm_cols");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  auto index = [cols](std::size_t g, std::size_t i) { return i * cols + g; };
  auto [xhat, inv_std] = normalize_groups(xv, cols, rows, eps, index);
  Array out = xhat;
  return tape_of(x).record(std::move(out), {x},
                           [inv_std = std::move(inv_std), rows, index](const BackwardContext& ctx) {
                             if (Array* gx = ctx.input_grad(0)) {
                               normalize_backward(ctx.out_value(), ctx.out_grad(), inv_std, rows, *gx, index);
                             }
                           },
                           "instance_norm_cols");
}

Var sum(Var x) {
  return tape_of(x).record(Array::scalar(numkit::sum(x.value())), {x},
                           [](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const double gy = ctx.out_grad()[0];
                             for (auto& v : g->values()) v += gy;
                           },
                           "sum");
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return tape_of(x).record(Array::scalar(numkit::mean(x.value())), {x},
                           [n](const BackwardContext& ctx) {
                             Array* g = ctx.input_grad(0);
                             if (!g) return;
                             const double gy = ctx.out_grad()[0] / n;
                             for (auto& v : g->values()) v += gy;
                           },
                           "mean");
}

}  // namespace sflow::numkit::ops
