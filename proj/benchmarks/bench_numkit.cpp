#include <benchmark/benchmark.h>

#include "sflow/numkit/autodiff.hpp"
#include "sflow/numkit/layers.hpp"
#include "sflow/numkit/ops.hpp"
#include "sflow/numkit/random.hpp"

namespace {

using namespace sflow::numkit;

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  ParameterSet params;
  params.add("w", rng.normal_array({n, n}, 0.1));
  const Array x = rng.normal_array({n, n}, 1.0);
  for (auto _ : state) {
    Tape tape;
    Var y = ops::matmul(tape.constant(x), tape.parameter(params, "w"));
    auto grads = tape.backward(ops::mean(ops::square(y)));
    benchmark::DoNotOptimize(grads);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_Conv1dForwardBackward(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  ParameterSet params;
  auto layer = layers::LocalFusion1D::create(params, "conv", 32, 32, 5, rng);
  const Array x = rng.normal_array({steps, 32}, 1.0);
  for (auto _ : state) {
    Tape tape;
    const Scope s{tape, params};
    auto grads = tape.backward(ops::mean(ops::square(layer(s, s.constant(x)))));
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(64)->Arg(256);

void BM_BiRecurrent(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  ParameterSet params;
  auto layer = layers::BiRecurrent::create(params, "rnn", 32, 16, rng);
  const Array x = rng.normal_array({steps, 32}, 1.0);
  for (auto _ : state) {
    Tape tape;
    const Scope s{tape, params};
    auto grads = tape.backward(ops::mean(ops::square(layer(s, s.constant(x)))));
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_BiRecurrent)->Arg(20)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
