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

#ifndef DPR_EVALUATION_H_
#define DPR_EVALUATION_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/composition.h"
#include "dpr/dataset.h"
#include "dpr/statistic.h"

namespace dpr {

// Synthetic census-style microdata: numeric columns with a mix of normal,
// log-normal, uniform, integer-coded and 0/1 distributions.
struct SyntheticData {
  Schema schema;
  std::shared_ptr<const Dataset> dataset;
};
absl::StatusOr<SyntheticData> SyntheticCensusData(int64_t n, int variables,
                                                  uint64_t seed);

struct CombinedReleaseConfig {
  int64_t n = 100000;
  int variables = 50;
  PrivacyParams global{0.3, 1.0 / (1 << 20)};
  int64_t histogram_bins = 10;
  int64_t cdf_grid = 32;
  uint64_t seed = 1;
};

struct StatisticError {
  std::string request_id;
  std::string variable;
  StatisticKind kind = StatisticKind::kMean;
  double epsilon = 0;
  double accuracy = 0;
  // Mean: |dp - true| / (b - a). Histogram: mean over cells of
  // |dp - true| / n. CDF: mean over grid points of |dp - true|.
  double normalized_error = 0;
};

struct CombinedReleaseResult {
  std::vector<StatisticError> errors;
  double mean_normalized_error = 0;
  double mean_error_means = 0;
  double mean_error_histograms = 0;
  double mean_error_cdfs = 0;
  // Optimal composition of the plan, against the global epsilon.
  double composed_epsilon = 0;
  double basic_epsilon = 0;
  double plan_seconds = 0;
  double release_seconds = 0;
};

// Mean, histogram and CDF of every variable under one global budget:
// repartition, then verify, deduct and release through a ReleaseEngine
// with an in-memory ledger, then compare against the exact statistics.
absl::StatusOr<CombinedReleaseResult> RunCombinedRelease(
    const CombinedReleaseConfig& config);

// Same pipeline on an existing dataset; the release timing covers the
// engine's Execute call only.
absl::StatusOr<CombinedReleaseResult> RunCombinedRelease(
    const SyntheticData& data, const CombinedReleaseConfig& config);

struct TrendConfig {
  int surveys = 34;
  int first_year = 2004;
  int last_year = 2017;
  int64_t mean_sample_size = 2000;
  // Share answering "favor" in the first and last year; linear between.
  double start_share = 0.31;
  double end_share = 0.62;
  double epsilon = 0.01;
  uint64_t seed = 1;
};

struct TrendResult {
  std::vector<double> times;
  std::vector<int64_t> sample_sizes;
  std::vector<double> true_means;
  std::vector<double> dp_means;
  double true_slope = 0;
  double true_intercept = 0;
  double dp_slope = 0;
  double dp_intercept = 0;
};

// Repeated binary-opinion surveys with a linear trend; each survey's mean
// is released with its own epsilon and a line is fitted to both series.
absl::StatusOr<TrendResult> RunTrendExperiment(const TrendConfig& config);

struct LineFit {
  double slope = 0;
  double intercept = 0;
};
// Ordinary least squares.
LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dpr

#endif  // DPR_EVALUATION_H_
