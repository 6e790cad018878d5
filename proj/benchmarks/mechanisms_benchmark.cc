// Copyright 2026 The dpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "dpr/mechanisms.h"
#include "dpr/random.h"

namespace dpr {
namespace {

Column UniformColumn(int64_t n) {
  Column c;
  c.spec.name = "x";
  c.spec.lower = 0;
  c.spec.upper = 100;
  c.spec.n = n;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 100);
  c.values.resize(static_cast<size_t>(n));
  for (double& v : c.values) v = u(gen);
  return c;
}

void BM_LaplaceNoise(benchmark::State& state) {
  SecureRandom rng = SecureRandom::Deterministic(1);
  for (auto _ : state) benchmark::DoNotOptimize(LaplaceNoise(2.0, rng));
}
BENCHMARK(BM_LaplaceNoise);

void BM_Snap(benchmark::State& state) {
  SecureRandom rng = SecureRandom::Deterministic(2);
  const SnapParams params{8, 0.25, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(Snap(1.3, params, 0.5, rng));
}
BENCHMARK(BM_Snap);

void BM_DpMean(benchmark::State& state) {
  const Column c = UniformColumn(state.range(0));
  SecureRandom rng = SecureRandom::Deterministic(3);
  for (auto _ : state) benchmark::DoNotOptimize(DpMean(c, 0.1, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DpMean)->Range(1 << 10, 1 << 20);

void BM_DpHistogram(benchmark::State& state) {
  const Column c = UniformColumn(state.range(0));
  const HistogramBins bins = HistogramBins::Uniform(0, 100, 10);
  SecureRandom rng = SecureRandom::Deterministic(4);
  for (auto _ : state) benchmark::DoNotOptimize(DpHistogram(c, 0.1, bins, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DpHistogram)->Range(1 << 10, 1 << 20);

void BM_DpCdf(benchmark::State& state) {
  const Column c = UniformColumn(1 << 16);
  SecureRandom rng = SecureRandom::Deterministic(5);
  for (auto _ : state) benchmark::DoNotOptimize(DpCdf(c, 0.1, state.range(0), rng));
}
BENCHMARK(BM_DpCdf)->RangeMultiplier(4)->Range(4, 1024);

void BM_DpQuantile(benchmark::State& state) {
  const Column c = UniformColumn(1 << 16);
  SecureRandom rng = SecureRandom::Deterministic(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(DpQuantile(c, 0.1, 0.5, rng, state.range(0)));
  }
}
BENCHMARK(BM_DpQuantile)->RangeMultiplier(4)->Range(16, 4096);

}  // namespace
}  // namespace dpr

BENCHMARK_MAIN();
