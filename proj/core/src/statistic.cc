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

#include "dpr/statistic.h"

#include "absl/strings/str_cat.h"

namespace dpr {

std::string_view StatisticKindName(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::kMean:
      return "mean";
    case StatisticKind::kHistogram:
      return "histogram";
    case StatisticKind::kCdf:
      return "cdf";
    case StatisticKind::kQuantile:
      return "quantile";
  }
  return "unknown";
}

absl::StatusOr<StatisticKind> ParseStatisticKind(std::string_view name) {
  if (name == "mean") return StatisticKind::kMean;
  if (name == "histogram") return StatisticKind::kHistogram;
  if (name == "cdf") return StatisticKind::kCdf;
  if (name == "quantile") return StatisticKind::kQuantile;
  return absl::UnimplementedError(
      absl::StrCat("unsupported statistic '", std::string(name), "'"));
}

}  // namespace dpr
