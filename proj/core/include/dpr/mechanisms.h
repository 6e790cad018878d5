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

#ifndef DPR_MECHANISMS_H_
#define DPR_MECHANISMS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/random.h"
#include "dpr/statistic.h"
#include "dpr/variable.h"

namespace dpr {

struct ClampResult {
  Column column;
  // Values that fell outside the declared range (or unknown categories).
  int64_t clamped = 0;
  int64_t missing = 0;
};

// Tokens treated as missing: "", "NA", "NaN", "null", ".".
bool IsMissingToken(std::string_view token);

// Parses raw tokens and truncates them into the declared range. Unknown
// categories go to the "other" level; missing tokens become NaN and are
// skipped by the mechanisms while n stays at its declared value. The error
// for an unparseable token names the 1-based row.
absl::StatusOr<ClampResult> ClampColumn(std::span<const std::string_view> raw,
                                        const VariableSpec& spec);

// Incremental form of ClampColumn: one token per row, in row order. The
// spec must already be valid.
class TokenClamper {
 public:
  explicit TokenClamper(const VariableSpec& spec);
  void Reserve(size_t rows);
  absl::Status Add(std::string_view token);
  ClampResult Finish() &&;

 private:
  VariableSpec spec_;
  Interval range_;
  std::unordered_map<std::string, double> levels_;
  ClampResult result_;
};

// Same for already-numeric input (numeric and boolean kinds).
absl::StatusOr<ClampResult> ClampValues(std::span<const double> raw,
                                        const VariableSpec& spec);

// One Laplace(scale) draw: an exponential magnitude with a uniform sign.
absl::StatusOr<double> LaplaceNoise(double scale, SecureRandom& rng);

// Mean with Laplace((b - a) / (n eps)) noise, clamped back into [a, b].
absl::StatusOr<ReleaseValue> DpMean(const Column& column, double epsilon,
                                    SecureRandom& rng,
                                    double alpha = kDefaultAlpha);

struct HistogramBins {
  // Numeric variables: strictly increasing edges from the range minimum to
  // the range maximum. Cell i is [edges[i], edges[i+1]); the last cell is
  // closed. Ignored for categorical and boolean variables, whose cells are
  // their levels (plus "other" for categoricals).
  std::vector<double> edges;

  static HistogramBins Uniform(double lower, double upper, int bins);
};

// Laplace(2 / eps) on every cell count (replacing one row moves one unit
// between two cells), then negative counts are clamped to 0.
absl::StatusOr<ReleaseValue> DpHistogram(const Column& column, double epsilon,
                                         const HistogramBins& bins,
                                         SecureRandom& rng,
                                         double alpha = kDefaultAlpha);

// CDF at the right edges of g equal cells of the declared range.
//
// Dyadic tree: levels 1..L (L = log2 g) each form a histogram of the data
// and get Laplace(2L / eps) per node. A prefix count is the sum of at most
// L nodes. The normalized curve is projected onto non-decreasing functions
// (pool adjacent violators), clamped to [0, 1], and its last point, the
// range maximum, is 1.
absl::StatusOr<ReleaseValue> DpCdf(const Column& column, double epsilon,
                                   int64_t grid_size, SecureRandom& rng,
                                   double alpha = kDefaultAlpha);

inline constexpr int64_t kDefaultQuantileCandidates = 1024;

// Exponential mechanism over `candidates` equal cells [l, r) of the range.
// A cell's utility is minus the distance from q n to the rank interval
// [#{x < l}, #{x < r}], so cells holding a q-quantile score 0
// (sensitivity 1). Releases the chosen cell's midpoint.
absl::StatusOr<ReleaseValue> DpQuantile(
    const Column& column, double epsilon, double quantile, SecureRandom& rng,
    int64_t candidates = kDefaultQuantileCandidates,
    double alpha = kDefaultAlpha);

struct SnapParams {
  // Outputs live in [-bound, bound].
  double bound = 1;
  // Rounding grid; must be a power of two no larger than 2 * bound.
  double grid = 1;
  double sensitivity = 1;
};

// Snapping mechanism:
//   clamp_B(round_grid(clamp_B(x) + (sensitivity / eps) * S * ln U))
// with S a fair sign and U drawn by SecureRandom::UniformFullPrecision.
absl::StatusOr<double> Snap(double true_value, const SnapParams& params,
                            double epsilon, SecureRandom& rng);

// Mean released through Snap instead of plain Laplace. Not the default: it
// costs utility. The range is centred so the snapping bound is (b - a) / 2.
absl::StatusOr<ReleaseValue> DpMeanSnapping(const Column& column,
                                            double epsilon, SecureRandom& rng,
                                            double alpha = kDefaultAlpha);

}  // namespace dpr

#endif  // DPR_MECHANISMS_H_
