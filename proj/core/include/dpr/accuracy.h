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

#ifndef DPR_ACCURACY_H_
#define DPR_ACCURACY_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "dpr/statistic.h"

namespace dpr {

// Public facts an a priori accuracy bound depends on.
struct AccuracyContext {
  int64_t n = 0;
  double range_width = 0;
  // Histogram cell count (categorical: levels plus "other").
  int64_t bins = 0;
  // CDF grid size; a power of two.
  int64_t grid_size = 0;
  // Quantile candidate cells.
  int64_t candidates = 0;
  // Mean released through the snapping mechanism instead of plain Laplace.
  bool snapping = false;
};

inline constexpr double kDefaultMaxEpsilon = 50.0;

// Radius t such that |release - true| <= t with probability >= 1 - alpha.
//
//   mean       (b - a) ln(1/alpha) / (n eps)
//   histogram  (2 / eps) ln(k / alpha), simultaneously for all k cells
//   cdf        L (2L / eps) ln(L / alpha) / n with L = log2(g), per point,
//              in CDF (probability) units
//   quantile   2 (ln m + ln(1/alpha)) / (eps n): rank error, as a fraction
//              of n, of the chosen cell relative to the best grid cell
//
// Snapped means add the rounding grid: lambda ln(1/alpha) + Lambda / 2.
absl::StatusOr<double> EpsilonToAccuracy(StatisticKind kind, double epsilon,
                                         double alpha,
                                         const AccuracyContext& context);

// Inverse of EpsilonToAccuracy. Fails with kOutOfRange when the target would
// need more than `max_epsilon`.
absl::StatusOr<double> AccuracyToEpsilon(
    StatisticKind kind, double accuracy, double alpha,
    const AccuracyContext& context, double max_epsilon = kDefaultMaxEpsilon);

// Scale of the Laplace noise a snapped mean uses, and the power-of-two
// rounding grid that goes with it.
double SnappingGrid(double noise_scale);

}  // namespace dpr

#endif  // DPR_ACCURACY_H_
