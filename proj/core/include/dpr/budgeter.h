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

#ifndef DPR_BUDGETER_H_
#define DPR_BUDGETER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/composition.h"
#include "dpr/request.h"

namespace dpr {

// Thresholds for global parameter vetting.
inline constexpr double kMaxGlobalDelta = 1e-4;
inline constexpr double kQuietGlobalDelta = 1e-6;
inline constexpr double kQuietGlobalEpsilon = 1.0;

struct VetResult {
  bool accepted = false;
  // Human-readable; set when rejected.
  std::string reason;
  std::vector<std::string> warnings;
};

// Rejects delta >= 1e-4 and epsilon <= 0 (with a hint when the two look
// swapped); warns for epsilon > 1 and for delta above 1e-6.
VetResult VetGlobalParams(const PrivacyParams& global);

struct SampleInfo {
  // The dataset is a secret, uniformly random subset of a population.
  bool secret = false;
  int64_t n = 0;
  // Population size, a conservative depositor estimate.
  double m = 0;
};

// Largest per-sample parameters whose subsampled guarantee stays within
// `global`: (ln(1 + eps m / n), min(delta m / n, 1e-4)). Returns `global`
// when the sample is not secret or when amplification would not help.
absl::StatusOr<PrivacyParams> AmplifyBudget(const PrivacyParams& global,
                                            const SampleInfo& sample);

struct GlobalBudget {
  PrivacyParams global;
  // After secrecy-of-the-sample amplification.
  PrivacyParams effective;
  PrivacyParams depositor;
  PrivacyParams analyst;
  std::string sensitivity_tier;
};

// Reserves `depositor_epsilon` of the effective budget for the depositor and
// leaves the rest to analysts. Delta is split in the same proportion.
absl::StatusOr<GlobalBudget> SplitBudget(const PrivacyParams& global,
                                         const PrivacyParams& effective,
                                         double depositor_epsilon);

struct RepartitionResult {
  // Same order as the input; epsilon and accuracy filled in for every entry.
  std::vector<StatisticRequest> requests;
  // Sum of the per-statistic parameters.
  PrivacyParams basic_total;
  // Optimal composition of the plan at the target delta.
  double composed_epsilon = 0;
  PrivacyParams target;
  double scale_factor = 1;
  std::vector<std::string> warnings;
};

// Spreads `target` over `requests`.
//
// Held requests keep their epsilon (or the epsilon their accuracy target
// needs). Unheld ones are weighted by their current epsilon, else by the
// epsilon their accuracy implies, else equally, and scaled together by the
// largest factor that keeps the plan within budget. Every accuracy is then
// recomputed. The result depends only on the arguments and not on the order
// of `requests`, and feeding it back in returns it unchanged.
absl::StatusOr<RepartitionResult> Repartition(
    std::span<const StatisticRequest> requests, const VariableMap& variables,
    int64_t n, const PrivacyParams& target);

}  // namespace dpr

#endif  // DPR_BUDGETER_H_
