#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "../support/gradient_suite.hpp"
#include <nlohmann/json.hpp>

#include "sflow/numkit/checkpoint.hpp"
#include "sflow/numkit/hash.hpp"
#include "sflow/numkit/optim.hpp"
#include "sflow/numkit/svg.hpp"
#include "sflow/numkit/text.hpp"

using namespace sflow::numkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "sflow_numkit_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Array, ShapeChecks) {
  EXPECT_THROW(Array({2, 0}), std::invalid_argument);
  EXPECT_THROW(Array({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
  Array a = Array::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a.at(1, 2), 6.0);
  EXPECT_THROW(a += Array({3, 2}), std::invalid_argument);
  EXPECT_EQ(a.reshaped({3, 2}).at(2, 1), 6.0);
  EXPECT_THROW(a.reshaped({4}), std::invalid_argument);
}

TEST(Array, Reductions) {
  Array a = Array::vector({3, -4});
  EXPECT_DOUBLE_EQ(sum(a), -1);
  EXPECT_DOUBLE_EQ(mean(a), -0.5);
  EXPECT_DOUBLE_EQ(l2_norm(a), 5);
  EXPECT_DOUBLE_EQ(max_abs_diff(a, Array::vector({3, 0})), 4);
  EXPECT_EQ(hadamard(a, a), Array::vector({9, 16}));
}

TEST(Autodiff, HandGradients) {
  Tape tape;
  Var x = tape.input(Array::vector({1, 2, 3}));
  Var y = ops::sum(ops::mul(ops::square(x), tape.constant(Array::vector({1, 10, 100}))));
  tape.backward(y);
  EXPECT_EQ(tape.grad(x), Array::vector({2, 40, 600}));
}

TEST(Autodiff, ParameterReuseAccumulates) {
  ParameterSet p;
  p.add("w", Array::scalar(3));
  Tape tape;
  Scope s{tape, p};
  Var a = s.param("w");
  Var b = s.param("w");
  EXPECT_EQ(a.id(), b.id());
  auto g = tape.backward(ops::mul(a, b));
  EXPECT_DOUBLE_EQ(g.at("w").item(), 6.0);
}

TEST(Autodiff, UnusedParameterGetsZeros) {
  ParameterSet p;
  p.add("used", Array::scalar(2));
  p.add("idle", Array::vector({1, 1}));
  Tape tape;
  Scope s{tape, p};
  s.param("idle");
  auto g = tape.backward(ops::scale(s.param("used"), 5));
  EXPECT_EQ(g.at("idle"), Array::vector({0, 0}));
  EXPECT_DOUBLE_EQ(g.at("used").item(), 5);
}

TEST(Autodiff, BackwardNeedsScalar) {
  Tape tape;
  Var x = tape.input(Array::vector({1, 2}));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
}

TEST(GradientSuite, EveryPrimitiveOnFiveShapes) {
  for (const auto& c : sflow::testing::primitive_cases()) {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const auto r = c.run(trial);
      EXPECT_LT(r.max_rel_error, 1e-4) << c.name << " trial " << trial;
      EXPECT_GT(r.checked, 0u);
    }
  }
}

TEST(GradientSuite, ElementwiseAndStructuralOps) {
  using sflow::testing::grad_check;
  ParameterSet none;
  Rng rng(17);
  const std::vector<std::pair<const char*, sflow::testing::Builder>> unary = {
      {"tanh", [](const Scope&, const std::vector<Var>& x) { return ops::tanh(x[0]); }},
      {"sigmoid", [](const Scope&, const std::vector<Var>& x) { return ops::sigmoid(x[0]); }},
      {"silu", [](const Scope&, const std::vector<Var>& x) { return ops::silu(x[0]); }},
      {"softmax", [](const Scope&, const std::vector<Var>& x) { return ops::softmax_rows(x[0]); }},
      {"transpose", [](const Scope&, const std::vector<Var>& x) { return ops::transpose(x[0]); }},
      {"gather", [](const Scope&, const std::vector<Var>& x) { return ops::gather_rows(x[0], {2, 0, 0, 1, 2}); }},
      {"slices",
       [](const Scope&, const std::vector<Var>& x) {
         return ops::concat_cols({ops::slice_rows(x[0], 1, 2), ops::slice_cols(ops::slice_rows(x[0], 0, 2), 1, 2)});
       }},
      {"mean", [](const Scope&, const std::vector<Var>& x) { return ops::mean(ops::add_scalar(x[0], 2)); }},
  };
  for (const auto& [name, fn] : unary) {
    const auto r = grad_check(none, {rng.normal_array({3, 4})}, fn, 3);
    EXPECT_LT(r.max_rel_error, 1e-4) << name;
  }
  const auto mm = grad_check(
      none, {rng.normal_array({3, 4}), rng.normal_array({4, 2})},
      [](const Scope&, const std::vector<Var>& x) { return ops::matmul(x[0], x[1]); }, 4);
  EXPECT_LT(mm.max_rel_error, 1e-4);
  const auto rows = grad_check(
      none, {rng.normal_array({2, 3}), rng.normal_array({1, 3}), rng.normal_array({3})},
      [](const Scope&, const std::vector<Var>& x) { return ops::add_row(ops::concat_rows({x[0], x[1]}), x[2]); }, 5);
  EXPECT_LT(rows.max_rel_error, 1e-4);
}

TEST(Layers, OutputShapes) {
  ParameterSet p;
  Rng rng(1);
  auto bi = layers::BiRecurrent::create(p, "bi", 3, 4, rng);
  auto ds = layers::DepthwiseSeparable2D::create(p, "ds", 2, 5, 3, rng);
  Tape tape;
  Scope s{tape, p};
  EXPECT_EQ(bi(s, tape.constant(Array({7, 3}))).shape(), (Shape{7, 8}));
  EXPECT_EQ(ds(s, tape.constant(Array({2, 4, 6}))).shape(), (Shape{5, 4, 6}));
}

TEST(Layers, Conv1dIdentityKernel) {
  Tape tape;
  Array w({3, 1, 1});
  w[1] = 1.0;
  Var x = tape.constant(Array::matrix(4, 1, {1, 2, 3, 4}));
  Var y = ops::conv1d(x, tape.constant(w), tape.constant(Array::vector({0.5})));
  EXPECT_EQ(y.value(), Array::matrix(4, 1, {1.5, 2.5, 3.5, 4.5}));
}

TEST(Optim, ScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(lr_at(0, 1.0, 10, 110), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(5, 1.0, 10, 110), 0.5);
  EXPECT_DOUBLE_EQ(lr_at(10, 1.0, 10, 110), 1.0);
  EXPECT_NEAR(lr_at(60, 1.0, 10, 110), 0.5, 1e-15);
  EXPECT_NEAR(lr_at(110, 1.0, 10, 110), 0.0, 1e-15);
  EXPECT_THROW(lr_at(111, 1.0, 10, 110), std::out_of_range);
  EXPECT_THROW(lr_at(0, 1.0, 10, 10), std::out_of_range);
}

TEST(Optim, AdamWHandOracle) {
  ParameterSet p;
  p.add("w", Array::vector({1.0, -2.0}));
  OptimizerState st;
  st.config.peak_lr = 0.1;
  st.config.schedule = ScheduleKind::kConstant;
  st.config.weight_decay = 0.01;
  GradientMap g{{"w", Array::vector({0.5, 0.0})}};
  adamw_step(p, g, st);
  // step 1: m_hat = g, v_hat = g^2, so the Adam part is lr * g / (|g| + eps)
  const double expect0 = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0);
  const double expect1 = -2.0 - 0.1 * (0.01 * -2.0);
  EXPECT_NEAR(p.get("w")[0], expect0, 1e-15);
  EXPECT_NEAR(p.get("w")[1], expect1, 1e-15);
  EXPECT_EQ(st.step, 1u);

  // second step, same gradient: m = 0.5(1 - b1^2), v = 0.25(1 - b2^2) -> bias-corrected to g again
  const double before = p.get("w")[0];
  adamw_step(p, g, st);
  EXPECT_NEAR(p.get("w")[0], before - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * before), 1e-14);
}

TEST(Optim, RejectsUnknownParameter) {
  ParameterSet p;
  p.add("w", Array::scalar(1));
  OptimizerState st;
  EXPECT_THROW(adamw_step(p, {{"v", Array::scalar(1)}}, st), std::invalid_argument);
}

TEST(Checkpoint, RoundTripBothFormats) {
  Checkpoint c;
  Rng rng(9);
  c.params.add("b", rng.normal_array({3}));
  c.params.add("a", rng.normal_array({2, 4}));
  c.params.add("s", Array::scalar(std::numbers::pi));
  c.metadata = R"({"k":1})";
  for (auto fmt : {CheckpointFormat::kBinary, CheckpointFormat::kJson}) {
    const auto path = scratch(fmt == CheckpointFormat::kBinary ? "c.bin" : "c.json");
    save_checkpoint(path, c, fmt);
    const auto back = load_checkpoint(path);
    EXPECT_EQ(back.params, c.params);
    EXPECT_EQ(nlohmann::json::parse(back.metadata), nlohmann::json::parse(c.metadata));
  }
}

TEST(Checkpoint, Errors) {
  EXPECT_THROW(load_checkpoint(scratch("missing.ckpt")), std::runtime_error);
  {
    std::ofstream(scratch("junk.ckpt")) << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(scratch("junk.ckpt")), std::runtime_error);

  Checkpoint c;
  c.params.add("w", Array::vector({1, 2, 3}));
  save_checkpoint(scratch("t.ckpt"), c);
  fs::resize_file(scratch("t.ckpt"), fs::file_size(scratch("t.ckpt")) - 4);
  EXPECT_THROW(load_checkpoint(scratch("t.ckpt")), std::runtime_error);

  save_checkpoint(scratch("v.ckpt"), c);
  {
    std::fstream f(scratch("v.ckpt"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(7);
    f.put('\x09');
  }
  try {
    load_checkpoint(scratch("v.ckpt"));
    FAIL() << "version 9 accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Random, SameSeedSameStream) {
  Rng a(42), b(42);
  EXPECT_EQ(a.normal_array({5}), b.normal_array({5}));
  EXPECT_EQ(a.permutation(10), b.permutation(10));
  Rng c(42);
  Rng fa = c.fork();
  Rng d(42);
  Rng fb = d.fork();
  EXPECT_EQ(fa.next_u64(), fb.next_u64());
}

TEST(Random, PermutationIsPermutation) {
  Rng r(3);
  auto p = r.permutation(100);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(Text, RoundTripFormatting) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(3.0), "3");
}

TEST(Hash, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  {
    std::ofstream(scratch("h.txt"), std::ios::binary) << "abc";
  }
  EXPECT_EQ(sha256_file(scratch("h.txt")), sha256_hex("abc"));
}

TEST(Svg, WellFormedAndDeterministic) {
  svg::Axes ax{"t", "x", "y"};
  std::vector<svg::Series> s{{"a", {0, 1, 2}, {1, 4, 9}}, {"", {0, 1}, {2, 2}}};
  const auto one = svg::line_plot(ax, s);
  EXPECT_EQ(one, svg::line_plot(ax, s));
  EXPECT_EQ(one.rfind("<svg", 0), 0u);
  EXPECT_NE(one.find("</svg>"), std::string::npos);
  EXPECT_NE(one.find(">a<"), std::string::npos);
  const auto h = svg::histogram_plot(ax, {0, 0.5, 1}, {3, 1});
  EXPECT_NE(h.find("<rect"), std::string::npos);
}

TEST(Oracles, PolynomialAndProduct) {
  Tape t1;
  Var x = t1.input(Array::scalar(3));
  t1.backward(ops::square(x));
  EXPECT_DOUBLE_EQ(t1.grad(x).item(), 6.0);
  Tape t2;
  Var a = t2.input(Array::scalar(2)), b = t2.input(Array::scalar(5));
  t2.backward(ops::mul(a, b));
  EXPECT_DOUBLE_EQ(t2.grad(a).item(), 5.0);
  EXPECT_DOUBLE_EQ(t2.grad(b).item(), 2.0);
}

TEST(Oracles, AdamWCases) {
  auto constant_state = [](double lr, double wd) {
    OptimizerState st;
    st.config.peak_lr = lr;
    st.config.weight_decay = wd;
    st.config.schedule = ScheduleKind::kConstant;
    return st;
  };
  ParameterSet p;
  p.add("w", Array::vector({0.7, -1.2}));
  const ParameterSet before = p;
  auto st = constant_state(0.1, 0.0);
  adamw_step(p, {{"w", Array::vector({0, 0})}}, st);
  EXPECT_EQ(p, before);

  ParameterSet q;
  q.add("w", Array::scalar(2.0));
  auto st1 = constant_state(0.1, 0.0);
  adamw_step(q, {{"w", Array::scalar(1.0)}}, st1);
  EXPECT_NEAR(q.get("w").item() - 2.0, -0.1, 1e-8);

  ParameterSet d;
  d.add("w", Array::scalar(4.0));
  auto st2 = constant_state(0.1, 0.01);
  adamw_step(d, {{"w", Array::scalar(0.0)}}, st2);
  EXPECT_NEAR(d.get("w").item() - 4.0, -0.001 * 4.0, 1e-15);
}

TEST(Oracles, PaperSchedule) {
  EXPECT_DOUBLE_EQ(lr_at(5000, 2e-5, 5000, 500000), 2e-5);
  EXPECT_DOUBLE_EQ(lr_at(2500, 2e-5, 5000, 500000), 1e-5);
  EXPECT_NEAR(lr_at(500000, 2e-5, 5000, 500000), 0.0, 1e-20);
  AdamWConfig defaults;
  EXPECT_DOUBLE_EQ(defaults.peak_lr, 2e-5);
  EXPECT_EQ(defaults.warmup_steps, 5000u);
}
