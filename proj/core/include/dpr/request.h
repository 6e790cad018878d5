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

#ifndef DPR_REQUEST_H_
#define DPR_REQUEST_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/accuracy.h"
#include "dpr/statistic.h"
#include "dpr/variable.h"
#include "nlohmann/json.hpp"

namespace dpr {

// A per-row transformation and the range the depositor or analyst declared
// for its output. The declared range is enforced on every derived value.
struct TransformSpec {
  std::string program;
  double lower = 0;
  double upper = 0;
};

inline constexpr int64_t kDefaultHistogramBins = 10;
inline constexpr int64_t kDefaultCdfGridSize = 32;

// One statistic to release.
struct StatisticRequest {
  std::string id;
  // Exactly one of `variable` and `transform` is set.
  std::string variable;
  std::optional<TransformSpec> transform;
  StatisticKind kind = StatisticKind::kMean;
  std::optional<double> epsilon;
  double delta = 0;
  std::optional<double> accuracy;
  double alpha = kDefaultAlpha;
  bool hold = false;

  // Histogram: explicit edges, or `bins` equal cells of the range.
  int64_t bins = kDefaultHistogramBins;
  std::vector<double> bin_edges;
  // CDF grid size (power of two).
  int64_t grid_size = kDefaultCdfGridSize;
  // Quantile level and candidate cells.
  double quantile = 0.5;
  int64_t candidates = 1024;
  // Means only: release through the snapping mechanism.
  bool snapping = false;

  absl::Status Validate() const;
  // Name of the column the statistic is computed on.
  std::string Target() const;
};

using VariableMap = std::map<std::string, VariableSpec, std::less<>>;

VariableMap MakeVariableMap(std::span<const VariableSpec> variables);

// The variable description the mechanism will see: the named variable, or a numeric column
// carrying the transformation's declared range.
absl::StatusOr<VariableSpec> ResolveSpec(const StatisticRequest& request,
                                         const VariableMap& variables,
                                         int64_t n);

absl::StatusOr<AccuracyContext> AccuracyContextFor(
    const StatisticRequest& request, const VariableMap& variables, int64_t n);

// Wire format. Field names are stable; see docs/wire_format.md.
nlohmann::json ToJson(const StatisticRequest& request);
absl::StatusOr<StatisticRequest> RequestFromJson(const nlohmann::json& json);

// Public fields of a variable only (name, kind, range or categories,
// description).
nlohmann::json ToJson(const VariableSpec& spec);
absl::StatusOr<VariableSpec> VariableFromJson(const nlohmann::json& json);

}  // namespace dpr

#endif  // DPR_REQUEST_H_
