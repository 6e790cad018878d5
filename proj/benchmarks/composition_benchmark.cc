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

#include <memory>
#include <random>
#include <span>
#include <vector>

#include "benchmark/benchmark.h"
#include "dpr/composition.h"

namespace dpr {
namespace {

std::vector<double> Epsilons(int k) {
  std::mt19937_64 gen(static_cast<uint64_t>(k));
  std::uniform_real_distribution<double> u(0.001, 0.1);
  std::vector<double> eps(static_cast<size_t>(k));
  for (double& e : eps) e = u(gen);
  return eps;
}

void BM_OptimalExact(benchmark::State& state) {
  const std::vector<double> eps = Epsilons(static_cast<int>(state.range(0)));
  const std::vector<double> deltas(eps.size(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(OptimalEpsilonExact(eps, deltas, 1e-6));
}
BENCHMARK(BM_OptimalExact)->DenseRange(2, 16, 2);

void BM_OptimalApprox(benchmark::State& state) {
  const std::vector<double> eps = Epsilons(static_cast<int>(state.range(0)));
  const std::vector<double> deltas(eps.size(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(OptimalEpsilonApprox(eps, deltas, 1e-6));
}
BENCHMARK(BM_OptimalApprox)->RangeMultiplier(2)->Range(4, 256);

void BM_MaxScaleFactor(benchmark::State& state) {
  const std::vector<double> eps = Epsilons(static_cast<int>(state.range(0)));
  std::vector<PrivacyParams> params;
  for (double e : eps) params.push_back({e, 0});
  const auto mask = std::make_unique<bool[]>(params.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(MaxScaleFactor(
        params, std::span<const bool>(mask.get(), params.size()), {1.0, 1e-6}));
  }
}
BENCHMARK(BM_MaxScaleFactor)->RangeMultiplier(4)->Range(4, 256);

}  // namespace
}  // namespace dpr

BENCHMARK_MAIN();
