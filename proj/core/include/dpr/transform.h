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

#ifndef DPR_TRANSFORM_H_
#define DPR_TRANSFORM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/dataset.h"
#include "dpr/dsl.h"
#include "dpr/request.h"
#include "dpr/variable.h"

namespace dpr {

// A transformation compiled to a straight-line stack program. Evaluating a
// row executes every instruction exactly once, whatever the row's values:
// there are no jumps, and comparisons and min/max select values without
// branching on them.
class CompiledTransform {
 public:
  static absl::StatusOr<CompiledTransform> Compile(const Expr& expr);

  // Dataset variables read by the program; Evaluate takes their values in
  // this order.
  const std::vector<std::string>& inputs() const { return inputs_; }
  size_t step_count() const { return code_.size(); }
  size_t scratch_size() const { return stack_size_ + slot_count_; }

  // `scratch` must hold scratch_size() doubles. Missing inputs (NaN)
  // propagate to the result. When `steps` is non-null it is incremented
  // once per executed instruction.
  double Evaluate(std::span<const double> inputs, std::span<double> scratch,
                  int64_t* steps = nullptr) const;

  enum class Code : uint8_t {
    kConst,
    kInput,
    kLoad,
    kStore,
    kNeg,
    kNot,
    kAdd,
    kSub,
    kMul,
    kLt,
    kLe,
    kEq,
    kGt,
    kGe,
    kMin,
    kMax,
  };
  struct Instruction {
    Code code;
    uint32_t index = 0;
    double value = 0;
  };

 private:
  std::vector<Instruction> code_;
  std::vector<std::string> inputs_;
  size_t stack_size_ = 0;
  size_t slot_count_ = 0;
};

struct TransformResult {
  // Numeric column carrying the declared range.
  Column column;
  Interval inferred;
  // Rows whose value was truncated into the declared range.
  int64_t clamped = 0;
  std::vector<std::string> warnings;
};

// Evaluates `expr` on every row and truncates each result into `declared`.
// Warns when the declared range is narrower (values will be clipped) or
// wider (more noise than needed) than the inferred one.
absl::StatusOr<TransformResult> EvaluateRows(const Expr& expr,
                                             const Dataset& dataset,
                                             const Interval& declared,
                                             std::string name);

// Parses, analyses and evaluates a transformation request.
absl::StatusOr<TransformResult> ApplyTransform(const TransformSpec& spec,
                                               const Dataset& dataset,
                                               std::string name);

}  // namespace dpr

#endif  // DPR_TRANSFORM_H_
