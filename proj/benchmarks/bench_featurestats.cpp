#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "sflow/featurestats/audio.hpp"
#include "sflow/featurestats/pccs.hpp"
#include "sflow/featurestats/spectral.hpp"
#include "sflow/numkit/random.hpp"

namespace {

using namespace sflow;

std::vector<double> tone(double rate, double seconds) {
  std::vector<double> x(static_cast<std::size_t>(rate * seconds));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 440.0 * i / rate);
  return x;
}

void BM_StftMel(benchmark::State& state) {
  const auto x = tone(16000, 2.0);
  const auto p = featurestats::preset("analyzer");
  for (auto _ : state) benchmark::DoNotOptimize(featurestats::extract(x, 16000, p));
}
BENCHMARK(BM_StftMel)->Unit(benchmark::kMillisecond);

void BM_Resample48kTo16k(benchmark::State& state) {
  const auto x = tone(48000, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(featurestats::resample(x, 48000, 16000));
}
BENCHMARK(BM_Resample48kTo16k)->Unit(benchmark::kMillisecond);

void BM_PccsAv(benchmark::State& state) {
  numkit::Rng rng(6);
  const featurestats::FeatureMatrix m{rng.normal_array({1000, 64}, 1.0)};
  const auto axis = state.range(0) ? featurestats::Axis::kChannel : featurestats::Axis::kTime;
  for (auto _ : state) benchmark::DoNotOptimize(featurestats::pccs_av(m, axis));
}
BENCHMARK(BM_PccsAv)->Arg(0)->Arg(1);

}  // namespace
