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

#ifndef DPR_RANGE_ANALYSIS_H_
#define DPR_RANGE_ANALYSIS_H_

#include <map>
#include <string>

#include "absl/status/statusor.h"
#include "dpr/dsl.h"
#include "dpr/variable.h"

namespace dpr {

using RangeEnv = std::map<std::string, Interval, std::less<>>;

// Declared ranges of the dataset's numeric and boolean variables.
RangeEnv RangesOf(const VariableMap& variables);

// Interval that contains every value `expr` can take when each variable
// lies in its range:
//   a + b, a - b    endpoint sums and differences
//   a * b           hull of the four corner products
//   comparisons     [0, 1]
//   and, or, min, max  component-wise min / max
//   not a           [1 - hi, 1 - lo]
//   let             the bound interval is threaded into the body
// Fails only on a variable missing from `env`.
absl::StatusOr<Interval> InferRange(const Expr& expr, const RangeEnv& env);

}  // namespace dpr

#endif  // DPR_RANGE_ANALYSIS_H_
