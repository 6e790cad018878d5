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

#include "dpr/composition.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

// log(1 + e^x) without overflow.
double LogOnePlusExp(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

absl::Status CheckLists(std::span<const double> epsilons,
                        std::span<const double> deltas) {
  if (!deltas.empty() && deltas.size() != epsilons.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "got ", epsilons.size(), " epsilons but ", deltas.size(), " deltas"));
  }
  for (size_t i = 0; i < epsilons.size(); ++i) {
    PrivacyParams p{epsilons[i], deltas.empty() ? 0.0 : deltas[i]};
    RETURN_IF_ERROR(p.Validate());
  }
  return absl::OkStatus();
}

// Right-hand side 1 - (1 - delta_g) / prod(1 - delta_i). Negative means
// delta_g is below the floor 1 - prod(1 - delta_i).
absl::StatusOr<double> DeltaAllowance(std::span<const double> deltas,
                                      double delta_g) {
  if (!(delta_g >= 0 && delta_g < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta_g must lie in [0, 1), got ", delta_g));
  }
  double log_keep = 0;
  for (double d : deltas) log_keep += std::log1p(-d);
  const double allowance = (std::expm1(log_keep) + delta_g) / std::exp(log_keep);
  if (allowance < 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "delta_g ", delta_g, " is below the feasibility floor ",
        -std::expm1(log_keep)));
  }
  return allowance;
}

// Least eps_g in [0, upper] with lhs(eps_g) <= allowance, for a
// non-increasing lhs with lhs(upper) <= allowance.
template <typename Lhs>
double BisectLeast(const Lhs& lhs, double allowance, double upper) {
  if (lhs(0.0) <= allowance) return 0;
  double lo = 0, hi = upper;
  while (hi - lo > 0.1 * kOptimalSearchTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (lhs(mid) <= allowance) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// Left-hand side of the optimal composition inequality for a list whose
// epsilons are all multiples of `step`: weights[i] = eps_i / step. The
// subset sum only depends on the weight total w, whose distribution under
// independent inclusion with probability e^eps_i / (1 + e^eps_i) is built by
// a dynamic program. Then
//   lhs(eps_g) = sum_w P(w) max(1 - e^{eps_g + E - 2 w step}, 0).
class GridComposition {
 public:
  GridComposition(std::span<const int64_t> weights, double step)
      : step_(step) {
    int64_t total = 0;
    for (int64_t a : weights) total += a;
    total_weight_ = total;
    total_epsilon_ = static_cast<double>(total) * step;

    std::vector<double> mass(static_cast<size_t>(total) + 1, 0.0);
    mass[0] = 1;
    int64_t reach = 0;
    for (int64_t a : weights) {
      if (a == 0) continue;
      const double include = 1 / (1 + std::exp(-static_cast<double>(a) * step));
      const double exclude = 1 - include;
      reach += a;
      for (int64_t w = reach; w >= 0; --w) {
        const double from = w >= a ? mass[static_cast<size_t>(w - a)] : 0.0;
        mass[static_cast<size_t>(w)] =
            exclude * mass[static_cast<size_t>(w)] + include * from;
      }
    }

    // Suffix sums over the weights that can ever be active (2 w step > E).
    first_active_ = static_cast<int64_t>(
        std::floor(total_epsilon_ / (2 * step))) + 1;
    const size_t count = static_cast<size_t>(
        std::max<int64_t>(0, total - first_active_ + 1));
    suffix_mass_.assign(count + 1, 0.0L);
    suffix_scaled_.assign(count + 1, 0.0L);
    for (size_t i = count; i-- > 0;) {
      const int64_t w = first_active_ + static_cast<int64_t>(i);
      const double p = mass[static_cast<size_t>(w)];
      long double scaled = 0;
      if (p > 0) {
        scaled = std::exp(std::log(p) + total_epsilon_ -
                          2 * static_cast<double>(w) * step);
      }
      suffix_mass_[i] = suffix_mass_[i + 1] + p;
      suffix_scaled_[i] = suffix_scaled_[i + 1] + scaled;
    }
  }

  double total_epsilon() const { return total_epsilon_; }

  double Lhs(double eps_g) const {
    // Active weights: 2 w step > eps_g + E.
    int64_t w = static_cast<int64_t>(
        std::floor((eps_g + total_epsilon_) / (2 * step_))) + 1;
    w = std::max(w, first_active_);
    if (w > total_weight_) return 0;
    const size_t i = static_cast<size_t>(w - first_active_);
    const long double value =
        suffix_mass_[i] - std::exp(static_cast<long double>(eps_g)) *
                              suffix_scaled_[i];
    return static_cast<double>(std::max(value, 0.0L));
  }

 private:
  double step_;
  int64_t total_weight_ = 0;
  double total_epsilon_ = 0;
  int64_t first_active_ = 0;
  std::vector<long double> suffix_mass_;
  std::vector<long double> suffix_scaled_;
};

constexpr int64_t kMaxGridWeight = int64_t{1} << 22;

}  // namespace

absl::Status PrivacyParams::Validate() const {
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and >= 0, got ", epsilon));
  }
  if (!(delta >= 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in [0, 1), got ", delta));
  }
  return absl::OkStatus();
}

bool WithinTolerance(double cost, double budget) {
  return cost <= budget * (1 + kBudgetRelativeTolerance) ||
         cost <= budget + 1e-300;
}

PrivacyParams BasicCompose(std::span<const PrivacyParams> params) {
  PrivacyParams total;
  for (const PrivacyParams& p : params) {
    total.epsilon += p.epsilon;
    total.delta += p.delta;
  }
  return total;
}

absl::StatusOr<double> OptimalEpsilonExact(std::span<const double> epsilons,
                                           std::span<const double> deltas,
                                           double delta_g) {
  RETURN_IF_ERROR(CheckLists(epsilons, deltas));
  if (epsilons.size() > kMaxExactCompositionSize) {
    return absl::OutOfRangeError(absl::StrCat(
        "exact optimal composition enumerates 2^k subsets; k = ",
        epsilons.size(), " exceeds ", kMaxExactCompositionSize,
        ", use the approximation"));
  }
  ASSIGN_OR_RETURN(const double allowance, DeltaAllowance(deltas, delta_g));
  const size_t k = epsilons.size();
  if (k == 0) return 0.0;

  const double total = std::accumulate(epsilons.begin(), epsilons.end(), 0.0);
  double log_norm = 0;
  for (double e : epsilons) log_norm += LogOnePlusExp(e);

  std::vector<double> sums(size_t{1} << k);
  sums[0] = 0;
  for (size_t mask = 1; mask < sums.size(); ++mask) {
    sums[mask] = sums[mask & (mask - 1)] + epsilons[std::countr_zero(mask)];
  }
  std::sort(sums.begin(), sums.end());

  // lhs(eps_g) = sum over subsets with 2 s > eps_g + E of
  //   e^{s - P} - e^{eps_g} e^{E - s - P},  P = sum log(1 + e^eps_i).
  std::vector<long double> suffix_a(sums.size() + 1, 0.0L);
  std::vector<long double> suffix_b(sums.size() + 1, 0.0L);
  for (size_t i = sums.size(); i-- > 0;) {
    suffix_a[i] = suffix_a[i + 1] + std::exp(static_cast<long double>(
                                        sums[i] - log_norm));
    suffix_b[i] = suffix_b[i + 1] + std::exp(static_cast<long double>(
                                        total - sums[i] - log_norm));
  }
  const auto lhs = [&](double eps_g) {
    const double threshold = 0.5 * (eps_g + total);
    const size_t i = static_cast<size_t>(
        std::upper_bound(sums.begin(), sums.end(), threshold) - sums.begin());
    const long double value =
        suffix_a[i] - std::exp(static_cast<long double>(eps_g)) * suffix_b[i];
    return static_cast<double>(std::max(value, 0.0L));
  };
  return BisectLeast(lhs, allowance, total);
}

absl::StatusOr<double> OptimalEpsilonApprox(std::span<const double> epsilons,
                                            std::span<const double> deltas,
                                            double delta_g, double slack) {
  RETURN_IF_ERROR(CheckLists(epsilons, deltas));
  if (!(slack > 0)) {
    return absl::InvalidArgumentError("approximation slack must be positive");
  }
  ASSIGN_OR_RETURN(const double allowance, DeltaAllowance(deltas, delta_g));
  std::vector<double> active;
  for (double e : epsilons) {
    if (e > 0) active.push_back(e);
  }
  if (active.empty()) return 0.0;
  const double basic = std::accumulate(active.begin(), active.end(), 0.0);
  const double largest = *std::max_element(active.begin(), active.end());

  double step =
      std::min(largest, slack / (4 * std::sqrt(static_cast<double>(active.size()))));
  std::vector<int64_t> up(active.size());
  std::vector<int64_t> down(active.size());
  double upper = basic;
  while (true) {
    for (size_t i = 0; i < active.size(); ++i) {
      const double units = active[i] / step;
      up[i] = static_cast<int64_t>(std::ceil(units));
      down[i] = static_cast<int64_t>(std::floor(units));
    }
    const GridComposition rounded_up(up, step);
    upper = std::min(
        basic, BisectLeast([&](double e) { return rounded_up.Lhs(e); },
                           allowance, rounded_up.total_epsilon()));
    const GridComposition rounded_down(down, step);
    const double lower =
        BisectLeast([&](double e) { return rounded_down.Lhs(e); }, allowance,
                    rounded_down.total_epsilon());
    const int64_t next_weight =
        2 * std::accumulate(up.begin(), up.end(), int64_t{0});
    if (upper - lower <= slack || next_weight > kMaxGridWeight) break;
    step /= 2;
  }
  return upper;
}

absl::StatusOr<double> ComposeOptimal(std::span<const PrivacyParams> params,
                                      double delta_g) {
  std::vector<double> epsilons(params.size());
  std::vector<double> deltas(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    epsilons[i] = params[i].epsilon;
    deltas[i] = params[i].delta;
  }
  if (params.size() <= kMaxExactCompositionSize) {
    return OptimalEpsilonExact(epsilons, deltas, delta_g);
  }
  return OptimalEpsilonApprox(epsilons, deltas, delta_g);
}

bool CheckWithinBudget(std::span<const PrivacyParams> params,
                       const PrivacyParams& global) {
  if (params.empty()) return true;
  const absl::StatusOr<double> composed = ComposeOptimal(params, global.delta);
  return composed.ok() && WithinTolerance(*composed, global.epsilon);
}

absl::StatusOr<double> MaxScaleFactor(std::span<const PrivacyParams> params,
                                      std::span<const bool> held,
                                      const PrivacyParams& global) {
  if (held.size() != params.size()) {
    return absl::InvalidArgumentError("held mask and parameter list differ in size");
  }
  RETURN_IF_ERROR(global.Validate());
  for (const PrivacyParams& p : params) RETURN_IF_ERROR(p.Validate());

  double held_epsilon = 0, unheld_epsilon = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    (held[i] ? held_epsilon : unheld_epsilon) += params[i].epsilon;
  }
  std::vector<PrivacyParams> scaled(params.begin(), params.end());
  const auto feasible = [&](double c) {
    for (size_t i = 0; i < params.size(); ++i) {
      if (!held[i]) scaled[i].epsilon = params[i].epsilon * c;
    }
    return CheckWithinBudget(scaled, global);
  };

  if (!feasible(0)) {
    return absl::FailedPreconditionError(
        "held statistics alone exceed the privacy budget");
  }
  if (unheld_epsilon == 0) return 1.0;

  // Basic composition is never better than optimal, so its scale factor is a
  // feasible starting point whenever it is positive.
  double lo = (global.epsilon - held_epsilon) / unheld_epsilon;
  if (!(lo > 0) || !feasible(lo)) {
    lo = std::min(1.0, global.epsilon / unheld_epsilon);
    int guard = 0;
    while (!feasible(lo)) {
      lo /= 2;
      if (++guard > 200) {
        return absl::FailedPreconditionError(
            "no positive scale keeps the statistics within budget");
      }
    }
  }
  double hi = 2 * lo;
  for (int guard = 0; feasible(hi); ++guard) {
    lo = hi;
    hi *= 2;
    if (guard > 200) return lo;
  }
  while (hi / lo - 1 > 1e-6) {
    const double mid = std::sqrt(lo * hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

BatchLedger::BatchLedger(PrivacyParams global, int64_t statistic_capacity)
    : global_(global), statistic_capacity_(std::max<int64_t>(1, statistic_capacity)) {}

PrivacyParams BatchLedger::Spent() const {
  PrivacyParams spent;
  for (const ClosedBatch& b : batches_) {
    spent.epsilon += b.cost.epsilon;
    spent.delta += b.cost.delta;
  }
  return spent;
}

PrivacyParams BatchLedger::Remaining() const {
  const PrivacyParams spent = Spent();
  return {std::max(0.0, global_.epsilon - spent.epsilon),
          std::max(0.0, global_.delta - spent.delta)};
}

absl::StatusOr<PrivacyParams> BatchLedger::BatchCost(
    std::span<const PrivacyParams> batch) const {
  for (const PrivacyParams& p : batch) RETURN_IF_ERROR(p.Validate());
  const PrivacyParams basic = BasicCompose(batch);
  if (batch.empty()) return basic;
  const double share =
      std::min(global_.delta * static_cast<double>(batch.size()) /
                   static_cast<double>(statistic_capacity_),
               Remaining().delta);
  double floor_log = 0;
  for (const PrivacyParams& p : batch) floor_log += std::log1p(-p.delta);
  if (share < -std::expm1(floor_log)) return basic;
  ASSIGN_OR_RETURN(const double epsilon, ComposeOptimal(batch, share));
  return PrivacyParams{std::min(epsilon, basic.epsilon), share};
}

void BatchLedger::AppendUnchecked(ClosedBatch batch) {
  statistic_count_ += static_cast<int64_t>(batch.statistics.size());
  batches_.push_back(std::move(batch));
}

bool BatchLedger::RemoveLast(const ClosedBatch& batch) {
  for (size_t i = batches_.size(); i-- > 0;) {
    if (batches_[i].statistics == batch.statistics &&
        batches_[i].cost == batch.cost) {
      statistic_count_ -= static_cast<int64_t>(batches_[i].statistics.size());
      batches_.erase(batches_.begin() + static_cast<std::ptrdiff_t>(i));
      return true;
    }
  }
  return false;
}

absl::StatusOr<FilterDecision> FilterCompose(
    const BatchLedger& ledger, std::span<const PrivacyParams> batch) {
  FilterDecision decision;
  decision.ledger = ledger;
  ASSIGN_OR_RETURN(decision.batch_cost, ledger.BatchCost(batch));
  const PrivacyParams spent = ledger.Spent();
  const PrivacyParams& global = ledger.global();
  if (batch.empty()) {
    decision.accepted = true;
    decision.remaining = ledger.Remaining();
    return decision;
  }
  const double epsilon_after = spent.epsilon + decision.batch_cost.epsilon;
  const double delta_after = spent.delta + decision.batch_cost.delta;
  if (WithinTolerance(epsilon_after, global.epsilon) &&
      WithinTolerance(delta_after, global.delta)) {
    decision.accepted = true;
    decision.ledger.AppendUnchecked(
        ClosedBatch{{batch.begin(), batch.end()}, decision.batch_cost});
  } else {
    const PrivacyParams remaining = ledger.Remaining();
    decision.reason = absl::StrCat(
        "batch costs (epsilon ", decision.batch_cost.epsilon, ", delta ",
        decision.batch_cost.delta, ") but only (epsilon ", remaining.epsilon,
        ", delta ", remaining.delta, ") remain");
  }
  decision.remaining = decision.ledger.Remaining();
  return decision;
}

}  // namespace dpr
