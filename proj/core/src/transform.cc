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

#include "dpr/transform.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpr/range_analysis.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

using Code = CompiledTransform::Code;
using Instruction = CompiledTransform::Instruction;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Compiler {
 public:
  absl::Status Emit(const Expr& e) {
    switch (e.op) {
      case ExprOp::kNumber:
        Push({Code::kConst, 0, e.number}, +1);
        return absl::OkStatus();
      case ExprOp::kVariable: {
        for (auto it = slots_.rbegin(); it != slots_.rend(); ++it) {
          if (it->first == e.name) {
            Push({Code::kLoad, it->second, 0}, +1);
            return absl::OkStatus();
          }
        }
        auto [it, inserted] =
            input_index_.emplace(e.name, static_cast<uint32_t>(inputs.size()));
        if (inserted) inputs.push_back(e.name);
        Push({Code::kInput, it->second, 0}, +1);
        return absl::OkStatus();
      }
      case ExprOp::kLet: {
        RETURN_IF_ERROR(Emit(*e.children[0]));
        const uint32_t slot = static_cast<uint32_t>(slot_count++);
        Push({Code::kStore, slot, 0}, -1);
        slots_.emplace_back(e.name, slot);
        const absl::Status body = Emit(*e.children[1]);
        slots_.pop_back();
        return body;
      }
      case ExprOp::kNeg:
      case ExprOp::kNot:
        RETURN_IF_ERROR(Emit(*e.children[0]));
        Push({e.op == ExprOp::kNeg ? Code::kNeg : Code::kNot, 0, 0}, 0);
        return absl::OkStatus();
      default:
        break;
    }
    RETURN_IF_ERROR(Emit(*e.children[0]));
    RETURN_IF_ERROR(Emit(*e.children[1]));
    Code code;
    switch (e.op) {
      case ExprOp::kAdd: code = Code::kAdd; break;
      case ExprOp::kSub: code = Code::kSub; break;
      case ExprOp::kMul: code = Code::kMul; break;
      case ExprOp::kLt: code = Code::kLt; break;
      case ExprOp::kLe: code = Code::kLe; break;
      case ExprOp::kEq: code = Code::kEq; break;
      case ExprOp::kGt: code = Code::kGt; break;
      case ExprOp::kGe: code = Code::kGe; break;
      case ExprOp::kAnd:
      case ExprOp::kMin: code = Code::kMin; break;
      case ExprOp::kOr:
      case ExprOp::kMax: code = Code::kMax; break;
      default:
        return absl::InternalError("unhandled operator");
    }
    Push({code, 0, 0}, -1);
    return absl::OkStatus();
  }

  std::vector<Instruction> code;
  std::vector<std::string> inputs;
  size_t max_depth = 0;
  size_t slot_count = 0;

 private:
  void Push(Instruction instruction, int depth_change) {
    code.push_back(instruction);
    depth_ = static_cast<size_t>(static_cast<int64_t>(depth_) + depth_change);
    max_depth = std::max(max_depth, depth_);
  }

  size_t depth_ = 0;
  std::map<std::string, uint32_t> input_index_;
  std::vector<std::pair<std::string, uint32_t>> slots_;
};

// NaN in either operand gives NaN.
inline double Indicator(bool value, double a, double b) {
  return std::isnan(a) || std::isnan(b) ? kNaN : static_cast<double>(value);
}

inline double Select(double a, double b, bool take_a) {
  return std::isnan(a) || std::isnan(b) ? kNaN : (take_a ? a : b);
}

}  // namespace

absl::StatusOr<CompiledTransform> CompiledTransform::Compile(const Expr& expr) {
  Compiler compiler;
  RETURN_IF_ERROR(compiler.Emit(expr));
  CompiledTransform out;
  out.code_ = std::move(compiler.code);
  out.inputs_ = std::move(compiler.inputs);
  out.stack_size_ = compiler.max_depth;
  out.slot_count_ = compiler.slot_count;
  return out;
}

double CompiledTransform::Evaluate(std::span<const double> inputs,
                                   std::span<double> scratch,
                                   int64_t* steps) const {
  double* stack = scratch.data();
  double* slots = scratch.data() + stack_size_;
  size_t top = 0;  // Number of live stack entries.
  for (const Instruction& in : code_) {
    switch (in.code) {
      case Code::kConst:
        stack[top++] = in.value;
        break;
      case Code::kInput:
        stack[top++] = inputs[in.index];
        break;
      case Code::kLoad:
        stack[top++] = slots[in.index];
        break;
      case Code::kStore:
        slots[in.index] = stack[--top];
        break;
      case Code::kNeg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Code::kNot:
        stack[top - 1] = 1 - stack[top - 1];
        break;
      default: {
        const double b = stack[--top];
        const double a = stack[top - 1];
        double r;
        switch (in.code) {
          case Code::kAdd: r = a + b; break;
          case Code::kSub: r = a - b; break;
          case Code::kMul: r = a * b; break;
          case Code::kLt: r = Indicator(a < b, a, b); break;
          case Code::kLe: r = Indicator(a <= b, a, b); break;
          case Code::kEq: r = Indicator(a == b, a, b); break;
          case Code::kGt: r = Indicator(a > b, a, b); break;
          case Code::kGe: r = Indicator(a >= b, a, b); break;
          case Code::kMin: r = Select(a, b, a <= b); break;
          case Code::kMax: r = Select(a, b, a >= b); break;
          default: r = kNaN; break;
        }
        stack[top - 1] = r;
      }
    }
    if (steps != nullptr) ++*steps;
  }
  return stack[0];
}

absl::StatusOr<TransformResult> EvaluateRows(const Expr& expr,
                                             const Dataset& dataset,
                                             const Interval& declared,
                                             std::string name) {
  if (!std::isfinite(declared.lo) || !std::isfinite(declared.hi) ||
      !(declared.lo < declared.hi)) {
    return absl::InvalidArgumentError(
        "declared range must be finite with lower < upper");
  }
  TransformResult result;
  ASSIGN_OR_RETURN(result.inferred,
                   InferRange(expr, RangesOf(dataset.variables())));
  if (result.inferred.lo < declared.lo || result.inferred.hi > declared.hi) {
    result.warnings.push_back(absl::StrFormat(
        "declared range [%g, %g] is narrower than the inferred range "
        "[%g, %g]; values outside it are clipped",
        declared.lo, declared.hi, result.inferred.lo, result.inferred.hi));
  }
  if (declared.lo < result.inferred.lo || declared.hi > result.inferred.hi) {
    result.warnings.push_back(absl::StrFormat(
        "declared range [%g, %g] is wider than the inferred range [%g, %g]; "
        "noise is calibrated to the wider range",
        declared.lo, declared.hi, result.inferred.lo, result.inferred.hi));
  }

  ASSIGN_OR_RETURN(const CompiledTransform program,
                   CompiledTransform::Compile(expr));
  std::vector<const Column*> sources;
  for (const std::string& input : program.inputs()) {
    const Column* column = dataset.Find(input);
    if (column == nullptr) {
      return absl::NotFoundError(absl::StrCat("no column '", input, "'"));
    }
    sources.push_back(column);
  }

  const int64_t n = dataset.n();
  result.column.spec.name = std::move(name);
  result.column.spec.kind = VariableKind::kNumeric;
  result.column.spec.lower = declared.lo;
  result.column.spec.upper = declared.hi;
  result.column.spec.n = n;
  result.column.values.resize(static_cast<size_t>(n));
  std::vector<double> row(sources.size());
  std::vector<double> scratch(std::max<size_t>(program.scratch_size(), 1));
  for (int64_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < sources.size(); ++j) {
      row[j] = sources[j]->values[static_cast<size_t>(i)];
    }
    double v = program.Evaluate(row, scratch);
    if (!std::isnan(v)) {
      if (v < declared.lo) {
        v = declared.lo;
        ++result.clamped;
      } else if (v > declared.hi) {
        v = declared.hi;
        ++result.clamped;
      }
    }
    result.column.values[static_cast<size_t>(i)] = v;
  }
  return result;
}

absl::StatusOr<TransformResult> ApplyTransform(const TransformSpec& spec,
                                               const Dataset& dataset,
                                               std::string name) {
  ASSIGN_OR_RETURN(const ExprPtr expr,
                   ParseProgram(spec.program, dataset.variables()));
  return EvaluateRows(*expr, dataset, Interval{spec.lower, spec.upper},
                      std::move(name));
}

}  // namespace dpr
