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

#include "dpr/range_analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dpr/transform.h"
#include "gtest/gtest.h"
#include "random_ast.h"
#include "test_util.h"

namespace dpr {
namespace {

using ::dpr::testing::Boolean;
using ::dpr::testing::Numeric;

Interval Infer(std::string_view source, const RangeEnv& env,
               const VariableMap& vars) {
  const auto e = ParseProgram(source, vars);
  EXPECT_TRUE(e.ok()) << e.status();
  const auto r = InferRange(**e, env);
  EXPECT_TRUE(r.ok()) << r.status();
  return r.ok() ? *r : Interval{NAN, NAN};
}

class RangeAnalysisTest : public ::testing::Test {
 protected:
  RangeAnalysisTest() {
    const std::vector<VariableSpec> specs = {Numeric("A", 0, 2), Numeric("B", -1, 2),
                                             Numeric("C", 3, 7), Boolean("F")};
    vars_ = MakeVariableMap(specs);
    env_ = RangesOf(vars_);
  }
  Interval Of(std::string_view source) { return Infer(source, env_, vars_); }

  VariableMap vars_;
  RangeEnv env_;
};

TEST_F(RangeAnalysisTest, DeclaredRangesAreTheEnvironment) {
  EXPECT_EQ(env_.at("A"), (Interval{0, 2}));
  EXPECT_EQ(env_.at("F"), (Interval{0, 1}));
}

TEST_F(RangeAnalysisTest, ExactCases) {
  EXPECT_EQ(Of("A * A"), (Interval{0, 4}));
  EXPECT_EQ(Of("C * C"), (Interval{9, 49}));
  // Corner products do not know both factors are the same variable.
  EXPECT_EQ(Of("B * B"), (Interval{-2, 4}));
  EXPECT_EQ(Of("A + B"), (Interval{-1, 4}));
  EXPECT_EQ(Of("A - B"), (Interval{-2, 3}));
  EXPECT_EQ(Of("-B"), (Interval{-2, 1}));
  EXPECT_EQ(Of("A < B"), (Interval{0, 1}));
  EXPECT_EQ(Of("not F"), (Interval{0, 1}));
  EXPECT_EQ(Of("min(A, C)"), (Interval{0, 2}));
  EXPECT_EQ(Of("max(B, C)"), (Interval{3, 7}));
  EXPECT_EQ(Of("max(min(C, 5), 4)"), (Interval{4, 5}));
  EXPECT_EQ(Of("let s = A + C in s * 2"), (Interval{6, 18}));
  EXPECT_EQ(Of("3"), (Interval{3, 3}));
}

TEST_F(RangeAnalysisTest, ProductOfNonNegativeIntervalIsSquareOfEndpoints) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 200; ++i) {
    double a = u(gen), b = u(gen);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    const std::vector<VariableSpec> specs = {Numeric("X", a, b)};
    const VariableMap vars = MakeVariableMap(specs);
    EXPECT_EQ(Infer("X * X", RangesOf(vars), vars), (Interval{a * a, b * b}));
  }
}

TEST_F(RangeAnalysisTest, MissingVariableFails) {
  const auto e = ParseProgram("A + C", vars_);
  DPR_ASSERT_OK(e);
  RangeEnv partial = {{"A", Interval{0, 1}}};
  EXPECT_FALSE(InferRange(**e, partial).ok());
}

// Reference tree-walking interpreter, independent of the compiled program.
double Reference(const Expr& e, std::map<std::string, double>& env) {
  const auto bin = [&](int i) { return Reference(*e.children[i], env); };
  switch (e.op) {
    case ExprOp::kNumber: return e.number;
    case ExprOp::kVariable: return env.at(e.name);
    case ExprOp::kLet: {
      env[e.name] = bin(0);
      const double r = bin(1);
      env.erase(e.name);
      return r;
    }
    case ExprOp::kNeg: return -bin(0);
    case ExprOp::kNot: return 1 - bin(0);
    case ExprOp::kAdd: return bin(0) + bin(1);
    case ExprOp::kSub: return bin(0) - bin(1);
    case ExprOp::kMul: return bin(0) * bin(1);
    case ExprOp::kLt: return bin(0) < bin(1) ? 1 : 0;
    case ExprOp::kLe: return bin(0) <= bin(1) ? 1 : 0;
    case ExprOp::kEq: return bin(0) == bin(1) ? 1 : 0;
    case ExprOp::kGt: return bin(0) > bin(1) ? 1 : 0;
    case ExprOp::kGe: return bin(0) >= bin(1) ? 1 : 0;
    case ExprOp::kAnd:
    case ExprOp::kMin: return std::min(bin(0), bin(1));
    case ExprOp::kOr:
    case ExprOp::kMax: return std::max(bin(0), bin(1));
  }
  return NAN;
}

TEST_F(RangeAnalysisTest, InferredRangeContainsEveryEvaluation) {
  std::mt19937_64 gen(2024);
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    ::dpr::testing::RandomAst ast(seed);
    const ExprPtr e = ast.Generate(6);
    const auto range = InferRange(*e, env_);
    ASSERT_TRUE(range.ok()) << range.status();
    const auto program = CompiledTransform::Compile(*e);
    DPR_ASSERT_OK(program);
    std::vector<double> scratch(program->scratch_size() + 1);
    for (int row = 0; row < 100; ++row) {
      std::map<std::string, double> values;
      for (const auto& [name, interval] : env_) {
        const int pick = static_cast<int>(gen() % 4);
        double v = interval.lo + (interval.hi - interval.lo) *
                                     std::uniform_real_distribution<double>(0, 1)(gen);
        if (pick == 0) v = interval.lo;
        if (pick == 1) v = interval.hi;
        if (name == "F") v = static_cast<double>(gen() % 2);
        values[name] = v;
      }
      std::vector<double> inputs;
      for (const std::string& in : program->inputs()) inputs.push_back(values.at(in));
      const double compiled = program->Evaluate(inputs, scratch);
      const double reference = Reference(*e, values);
      ASSERT_EQ(compiled, reference) << PrettyPrint(*e);
      ASSERT_TRUE(range->Contains(compiled))
          << PrettyPrint(*e) << " = " << compiled << " outside [" << range->lo
          << ", " << range->hi << "]";
    }
  }
}

}  // namespace
}  // namespace dpr
