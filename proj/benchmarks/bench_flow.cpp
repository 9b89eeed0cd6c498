#include <benchmark/benchmark.h>

#include "sflow/couplings/mlp_field.hpp"
#include "sflow/flowcore/flow.hpp"
#include "sflow/numkit/random.hpp"
#include "sflow/toyclone/pipeline.hpp"

namespace {

using namespace sflow;

void BM_EulerSolveMlp(benchmark::State& state) {
  const auto nfe = static_cast<std::size_t>(state.range(0));
  couplings::MlpField field(2, 64, 3, 1);
  numkit::Rng rng(4);
  const auto starts = rng.normal_array({256, 2}, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(flowcore::euler_solve(field, starts, nfe));
}
BENCHMARK(BM_EulerSolveMlp)->Arg(8)->Arg(128);

void BM_CloneTrainStep(benchmark::State& state) {
  const auto data = toyclone::default_corpora(1234, 8, 0);
  toyclone::CloneConfig mc;
  mc.version = state.range(0) ? toyclone::DetailVersion::kV2 : toyclone::DetailVersion::kV1;
  toyclone::CloneModel model(mc);
  toyclone::TrainConfig tc;
  auto opt = toyclone::make_optimizer(tc);
  numkit::Rng rng(5);
  std::vector<toyclone::Example> batch;
  for (const auto& u : data.train) batch.push_back(toyclone::make_example(u, toyclone::make_mask(u.frames(), 0.7, rng)));
  const auto variant = toyclone::variant_for(toyclone::AblationConfig::kF1F2M);
  for (auto _ : state) {
    if (opt.step >= tc.steps) opt = toyclone::make_optimizer(tc);
    benchmark::DoNotOptimize(toyclone::train_step(model, variant, batch, rng, opt, true));
  }
}
BENCHMARK(BM_CloneTrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
