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
#include <initializer_list>

#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

Interval Hull(std::initializer_list<double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

absl::StatusOr<Interval> Infer(const Expr& e, RangeEnv& env) {
  switch (e.op) {
    case ExprOp::kNumber:
      return Interval{e.number, e.number};
    case ExprOp::kVariable: {
      const auto it = env.find(e.name);
      if (it == env.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("no range for variable '", e.name, "'"));
      }
      return it->second;
    }
    case ExprOp::kLet: {
      ASSIGN_OR_RETURN(const Interval bound, Infer(*e.children[0], env));
      const auto [it, inserted] = env.emplace(e.name, bound);
      if (!inserted) {
        return absl::InvalidArgumentError(
            absl::StrCat("let name '", e.name, "' shadows a bound name"));
      }
      absl::StatusOr<Interval> body = Infer(*e.children[1], env);
      env.erase(it);
      return body;
    }
    case ExprOp::kNeg: {
      ASSIGN_OR_RETURN(const Interval a, Infer(*e.children[0], env));
      return Interval{-a.hi, -a.lo};
    }
    case ExprOp::kNot: {
      ASSIGN_OR_RETURN(const Interval a, Infer(*e.children[0], env));
      return Interval{1 - a.hi, 1 - a.lo};
    }
    default:
      break;
  }
  ASSIGN_OR_RETURN(const Interval a, Infer(*e.children[0], env));
  ASSIGN_OR_RETURN(const Interval b, Infer(*e.children[1], env));
  switch (e.op) {
    case ExprOp::kAdd:
      return Interval{a.lo + b.lo, a.hi + b.hi};
    case ExprOp::kSub:
      return Interval{a.lo - b.hi, a.hi - b.lo};
    case ExprOp::kMul:
      return Hull({a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi});
    case ExprOp::kLt:
    case ExprOp::kLe:
    case ExprOp::kEq:
    case ExprOp::kGt:
    case ExprOp::kGe:
      return Interval{0, 1};
    case ExprOp::kAnd:
    case ExprOp::kMin:
      return Interval{std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
    case ExprOp::kOr:
    case ExprOp::kMax:
      return Interval{std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
    default:
      return absl::InternalError("unhandled operator in range analysis");
  }
}

}  // namespace

RangeEnv RangesOf(const VariableMap& variables) {
  RangeEnv env;
  for (const auto& [name, spec] : variables) {
    if (spec.kind != VariableKind::kCategorical) env.emplace(name, spec.range());
  }
  return env;
}

absl::StatusOr<Interval> InferRange(const Expr& expr, const RangeEnv& env) {
  RangeEnv scratch = env;
  return Infer(expr, scratch);
}

}  // namespace dpr
