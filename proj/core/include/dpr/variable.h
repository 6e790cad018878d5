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

#ifndef DPR_VARIABLE_H_
#define DPR_VARIABLE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpr {

enum class VariableKind { kNumeric, kCategorical, kBoolean };

std::string_view VariableKindName(VariableKind kind);
absl::StatusOr<VariableKind> ParseVariableKind(std::string_view name);

// Closed interval [lo, hi] with finite endpoints.
struct Interval {
  double lo = 0;
  double hi = 0;

  double width() const { return hi - lo; }
  bool Contains(double x) const { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Public, depositor-declared description of one column. The declared range
// (never the empirical one) calibrates every mechanism.
struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::kNumeric;
  // Numeric range. Booleans are always [0, 1].
  double lower = 0;
  double upper = 0;
  // Categorical levels. Anything else maps to an extra "other" level with
  // index categories.size().
  std::vector<std::string> categories;
  // Declared record count; public.
  int64_t n = 0;
  std::string description;

  absl::Status Validate() const;

  Interval range() const;
  // Number of histogram cells for a categorical variable, including "other".
  size_t CategoryCount() const { return categories.size() + 1; }
  size_t OtherIndex() const { return categories.size(); }
};

inline constexpr std::string_view kOtherCategory = "other";

// A clamped column. Missing entries are NaN; values.size() is the number of
// rows and always equals spec.n once ingested. Categorical values hold the
// level index.
struct Column {
  VariableSpec spec;
  std::vector<double> values;
};

}  // namespace dpr

#endif  // DPR_VARIABLE_H_
