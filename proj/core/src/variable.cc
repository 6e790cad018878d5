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

#include "dpr/variable.h"

#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"

namespace dpr {

std::string_view VariableKindName(VariableKind kind) {
  switch (kind) {
    case VariableKind::kNumeric:
      return "numeric";
    case VariableKind::kCategorical:
      return "categorical";
    case VariableKind::kBoolean:
      return "boolean";
  }
  return "unknown";
}

absl::StatusOr<VariableKind> ParseVariableKind(std::string_view name) {
  if (name == "numeric") return VariableKind::kNumeric;
  if (name == "categorical") return VariableKind::kCategorical;
  if (name == "boolean") return VariableKind::kBoolean;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown variable kind '", std::string(name), "'"));
}

absl::Status VariableSpec::Validate() const {
  if (name.empty()) return absl::InvalidArgumentError("variable without name");
  if (n < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("variable '", name, "': negative record count"));
  }
  switch (kind) {
    case VariableKind::kNumeric:
      if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "variable '", name, "': range must satisfy lower < upper, got [",
            lower, ", ", upper, "]"));
      }
      break;
    case VariableKind::kCategorical: {
      if (categories.empty()) {
        return absl::InvalidArgumentError(
            absl::StrCat("variable '", name, "': empty category list"));
      }
      std::set<std::string_view> seen;
      for (const std::string& c : categories) {
        if (!seen.insert(c).second) {
          return absl::InvalidArgumentError(absl::StrCat(
              "variable '", name, "': duplicate category '", c, "'"));
        }
        if (c == kOtherCategory) {
          return absl::InvalidArgumentError(absl::StrCat(
              "variable '", name, "': '", std::string(kOtherCategory), "' is reserved"));
        }
      }
      break;
    }
    case VariableKind::kBoolean:
      break;
  }
  return absl::OkStatus();
}

Interval VariableSpec::range() const {
  switch (kind) {
    case VariableKind::kNumeric:
      return {lower, upper};
    case VariableKind::kBoolean:
      return {0, 1};
    case VariableKind::kCategorical:
      return {0, static_cast<double>(categories.size())};
  }
  return {lower, upper};
}

}  // namespace dpr
