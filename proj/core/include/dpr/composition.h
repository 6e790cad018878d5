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

#ifndef DPR_COMPOSITION_H_
#define DPR_COMPOSITION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpr {

struct PrivacyParams {
  double epsilon = 0;
  double delta = 0;

  // epsilon finite and >= 0, delta in [0, 1).
  absl::Status Validate() const;
  friend bool operator==(const PrivacyParams&, const PrivacyParams&) = default;
};

// Relative slack used for every budget comparison; absorbs floating-point
// drift in the composition searches.
inline constexpr double kBudgetRelativeTolerance = 1e-9;

// True when `cost` fits in `budget` up to kBudgetRelativeTolerance.
bool WithinTolerance(double cost, double budget);

// (sum of epsilons, sum of deltas). An empty list costs nothing.
PrivacyParams BasicCompose(std::span<const PrivacyParams> params);

// Largest list the exact subset enumeration accepts.
inline constexpr size_t kMaxExactCompositionSize = 20;
inline constexpr double kOptimalSearchTolerance = 1e-9;
inline constexpr double kDefaultApproximationSlack = 1e-4;

// Least eps_g with
//
//   1 / prod(1 + e^eps_i) * sum_{S} max(e^{eps(S)} - e^{eps_g} e^{eps(~S)}, 0)
//       <= 1 - (1 - delta_g) / prod(1 - delta_i),
//
// the optimal composition of k mechanisms, found by bisection to within
// kOptimalSearchTolerance (the returned value always satisfies the
// inequality). Subset sums are handled in log space. Requires
// k <= kMaxExactCompositionSize and delta_g >= 1 - prod(1 - delta_i).
absl::StatusOr<double> OptimalEpsilonExact(std::span<const double> epsilons,
                                           std::span<const double> deltas,
                                           double delta_g);

// Upper bound on OptimalEpsilonExact within additive `slack`, for any k.
// Each eps_i is rounded up to a multiple of a step eps_0 (a geometric grid
// e^{a eps_0} in the exponential domain), which makes the subset sum a
// function of the integer weight sum; the weight distribution comes from a
// dynamic program. Rounding down the same way gives a certified lower
// bound, and the step is halved until the two are within `slack`. Never
// exceeds the basic-composition epsilon.
absl::StatusOr<double> OptimalEpsilonApprox(
    std::span<const double> epsilons, std::span<const double> deltas,
    double delta_g, double slack = kDefaultApproximationSlack);

// Optimal composition at `delta_g` with the exact routine for small lists
// and the approximation otherwise.
absl::StatusOr<double> ComposeOptimal(std::span<const PrivacyParams> params,
                                      double delta_g);

// Whether `params` composed optimally at global.delta stay within
// global.epsilon.
bool CheckWithinBudget(std::span<const PrivacyParams> params,
                       const PrivacyParams& global);

// Largest c such that multiplying every unheld epsilon by c keeps
// CheckWithinBudget true (relative tolerance 1e-6, the returned c is
// feasible). Held entries are left alone. Returns 1 when nothing is unheld.
absl::StatusOr<double> MaxScaleFactor(std::span<const PrivacyParams> params,
                                      std::span<const bool> held,
                                      const PrivacyParams& global);

// A batch that has been accepted by the filter.
struct ClosedBatch {
  std::vector<PrivacyParams> statistics;
  // Cost of the batch as a whole: optimal composition at the batch's delta
  // share, or basic composition when the share is below the batch's floor.
  PrivacyParams cost;
};

// Privacy filter state: optimal composition within each (non-adaptive)
// batch, basic composition across batches. The delta pool is handed out in
// proportion to statistic counts: a batch of k statistics gets
// global.delta * k / statistic_capacity, or whatever is left of the pool if
// that is less. A capacity of 1 hands the whole pool to the first batch.
class BatchLedger {
 public:
  BatchLedger() = default;
  BatchLedger(PrivacyParams global, int64_t statistic_capacity);

  const PrivacyParams& global() const { return global_; }
  int64_t statistic_capacity() const { return statistic_capacity_; }
  std::span<const ClosedBatch> batches() const { return batches_; }
  int64_t statistic_count() const { return statistic_count_; }

  PrivacyParams Spent() const;
  PrivacyParams Remaining() const;

  // Cost this ledger would assign to `batch`.
  absl::StatusOr<PrivacyParams> BatchCost(
      std::span<const PrivacyParams> batch) const;

  // Appends without checking; used when replaying persisted batches.
  void AppendUnchecked(ClosedBatch batch);
  // Removes the most recent batch equal to `batch`; used for refunds.
  bool RemoveLast(const ClosedBatch& batch);

 private:
  PrivacyParams global_;
  int64_t statistic_capacity_ = 1;
  std::vector<ClosedBatch> batches_;
  int64_t statistic_count_ = 0;
};

struct FilterDecision {
  bool accepted = false;
  // The updated ledger on accept, the input ledger unchanged on reject.
  BatchLedger ledger;
  PrivacyParams batch_cost;
  // Budget left after the decision.
  PrivacyParams remaining;
  std::string reason;
};

// Accepts `batch` iff the basic sum of batch costs including it stays within
// the global budget. Pure: the caller commits the returned ledger.
absl::StatusOr<FilterDecision> FilterCompose(
    const BatchLedger& ledger, std::span<const PrivacyParams> batch);

}  // namespace dpr

#endif  // DPR_COMPOSITION_H_
