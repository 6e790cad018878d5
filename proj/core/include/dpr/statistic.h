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

#ifndef DPR_STATISTIC_H_
#define DPR_STATISTIC_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace dpr {

enum class StatisticKind { kMean, kHistogram, kCdf, kQuantile };

std::string_view StatisticKindName(StatisticKind kind);
absl::StatusOr<StatisticKind> ParseStatisticKind(std::string_view name);

inline constexpr double kDefaultConfidence = 0.95;
inline constexpr double kDefaultAlpha = 1.0 - kDefaultConfidence;

namespace internal {
struct MechanismAccess;
struct MetadataAccess;
}  // namespace internal

// Output of a differentially private mechanism. There is no public way to
// build or modify one: values only come out of the mechanisms (or the
// trusted reload of already-published metadata), which is what lets the
// metadata writer refuse anything that is not a DP release.
class ReleaseValue {
 public:
  StatisticKind kind() const { return kind_; }
  // Name of the noise mechanism ("laplace", "dyadic-laplace",
  // "exponential", "snapping").
  const std::string& mechanism() const { return mechanism_; }
  // One entry for scalar statistics; per-bin counts for histograms;
  // CDF values at grid() for CDFs.
  const std::vector<double>& values() const { return values_; }
  double scalar() const { return values_.empty() ? 0.0 : values_.front(); }
  // Histogram edges (numeric variables) or CDF grid points.
  const std::vector<double>& grid() const { return grid_; }
  // Histogram bin labels for categorical variables.
  const std::vector<std::string>& labels() const { return labels_; }
  double epsilon_spent() const { return epsilon_spent_; }
  double delta_spent() const { return delta_spent_; }
  double accuracy() const { return accuracy_; }
  double confidence_level() const { return confidence_level_; }

 private:
  friend struct internal::MechanismAccess;
  friend struct internal::MetadataAccess;
  ReleaseValue() = default;

  StatisticKind kind_ = StatisticKind::kMean;
  std::string mechanism_;
  std::vector<double> values_;
  std::vector<double> grid_;
  std::vector<std::string> labels_;
  double epsilon_spent_ = 0;
  double delta_spent_ = 0;
  double accuracy_ = 0;
  double confidence_level_ = kDefaultConfidence;
};

}  // namespace dpr

#endif  // DPR_STATISTIC_H_
