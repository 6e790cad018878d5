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

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "dpr/dsl.h"
#include "dpr/request.h"
#include "dpr/transform.h"

namespace dpr {
namespace {

VariableMap Variables() {
  std::vector<VariableSpec> specs(3);
  specs[0].name = "age";
  specs[0].lower = 18;
  specs[0].upper = 90;
  specs[1].name = "income";
  specs[1].upper = 1e6;
  specs[2].name = "employed";
  specs[2].kind = VariableKind::kBoolean;
  specs[2].upper = 1;
  return MakeVariableMap(specs);
}

void BM_Parse(benchmark::State& state) {
  const VariableMap vars = Variables();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ParseProgram(
        "let a = age - 18 in min(a * a, 1000) + max(income, 0) * (employed and age > 30)",
        vars));
  }
}
BENCHMARK(BM_Parse);

void BM_EvaluateRow(benchmark::State& state) {
  const auto expr = ParseProgram(
      "let a = age - 18 in min(a * a, 1000) + max(income, 0) * (employed and age > 30)",
      Variables());
  const auto program = CompiledTransform::Compile(**expr);
  std::vector<double> scratch(program->scratch_size());
  std::vector<double> row(program->inputs().size());
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : row) v = u(gen);
  for (auto _ : state) {
    benchmark::DoNotOptimize(program->Evaluate(row, scratch));
  }
}
BENCHMARK(BM_EvaluateRow);

}  // namespace
}  // namespace dpr

BENCHMARK_MAIN();
