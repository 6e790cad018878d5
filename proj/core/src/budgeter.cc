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

#include "dpr/budgeter.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpr/accuracy.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

// Rounds to 12 significant digits. Weights pass through this so that a plan
// fed back into Repartition reproduces the same weights bit for bit.
double Canonical(double x) {
  if (x == 0 || !std::isfinite(x)) return x;
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(x))));
  const double scale = std::pow(10.0, 11 - exponent);
  return std::round(x * scale) / scale;
}

}  // namespace

VetResult VetGlobalParams(const PrivacyParams& global) {
  VetResult out;
  const double eps = global.epsilon;
  const double delta = global.delta;
  if (!std::isfinite(eps) || !(eps > 0)) {
    out.reason = absl::StrFormat(
        "global epsilon must be positive and finite (got %g)", eps);
  } else if (!(delta >= 0) || !(delta < kMaxGlobalDelta)) {
    out.reason = absl::StrFormat(
        "global delta must be below %g (got %g); delta is the probability of "
        "an outright privacy failure and should be tiny, e.g. 2^-30",
        kMaxGlobalDelta, delta);
    if (eps < kMaxGlobalDelta && delta <= kQuietGlobalEpsilon) {
      absl::StrAppendFormat(
          &out.reason,
          ". epsilon=%g and delta=%g look swapped: epsilon is usually between "
          "0.01 and 1",
          eps, delta);
    }
  }
  if (!out.reason.empty()) return out;
  out.accepted = true;
  if (eps > kQuietGlobalEpsilon) {
    out.warnings.push_back(absl::StrFormat(
        "global epsilon %g is above 1; releases may reveal noticeably more "
        "about individuals",
        eps));
  }
  if (delta > kQuietGlobalDelta) {
    out.warnings.push_back(absl::StrFormat(
        "global delta %g is above %g; consider a smaller value such as 2^-30",
        delta, kQuietGlobalDelta));
  }
  return out;
}

absl::StatusOr<PrivacyParams> AmplifyBudget(const PrivacyParams& global,
                                            const SampleInfo& sample) {
  RETURN_IF_ERROR(global.Validate());
  if (!sample.secret) return global;
  if (sample.n < 1 || !std::isfinite(sample.m) ||
      !(sample.m >= static_cast<double>(sample.n))) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "population size m=%g must be at least the sample size n=%d",
        sample.m, sample.n));
  }
  const double ratio = sample.m / static_cast<double>(sample.n);
  PrivacyParams effective;
  effective.epsilon = std::log1p(global.epsilon * ratio);
  effective.delta = std::min(global.delta * ratio, kMaxGlobalDelta);
  if (effective.epsilon < global.epsilon) return global;
  // The logarithm may land an ulp above the exact inverse; the forward
  // bound must hold.
  while (std::expm1(effective.epsilon) / ratio > global.epsilon) {
    effective.epsilon = std::nextafter(effective.epsilon, 0.0);
  }
  effective.delta = std::max(effective.delta, global.delta);
  return effective;
}

absl::StatusOr<GlobalBudget> SplitBudget(const PrivacyParams& global,
                                         const PrivacyParams& effective,
                                         double depositor_epsilon) {
  RETURN_IF_ERROR(global.Validate());
  RETURN_IF_ERROR(effective.Validate());
  if (!(depositor_epsilon >= 0)) {
    return absl::InvalidArgumentError("depositor epsilon must be >= 0");
  }
  if (!WithinTolerance(depositor_epsilon, effective.epsilon)) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "depositor share %g exceeds the available epsilon %g",
        depositor_epsilon, effective.epsilon));
  }
  depositor_epsilon = std::min(depositor_epsilon, effective.epsilon);
  GlobalBudget out;
  out.global = global;
  out.effective = effective;
  const double fraction =
      effective.epsilon > 0 ? depositor_epsilon / effective.epsilon : 0;
  out.depositor = {depositor_epsilon, effective.delta * fraction};
  out.analyst = {std::max(0.0, effective.epsilon - depositor_epsilon),
                 std::max(0.0, effective.delta - out.depositor.delta)};
  return out;
}

absl::StatusOr<RepartitionResult> Repartition(
    std::span<const StatisticRequest> requests, const VariableMap& variables,
    int64_t n, const PrivacyParams& target) {
  RETURN_IF_ERROR(target.Validate());
  if (n < 1) return absl::InvalidArgumentError("n must be >= 1");

  // Work in id order so the arithmetic does not depend on input order.
  std::vector<size_t> order(requests.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return requests[a].id < requests[b].id;
  });
  for (size_t i = 1; i < order.size(); ++i) {
    if (requests[order[i]].id == requests[order[i - 1]].id) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate request id '", requests[order[i]].id, "'"));
    }
  }

  const size_t k = requests.size();
  std::vector<AccuracyContext> contexts(k);
  std::vector<PrivacyParams> params(k);
  std::vector<char> held(k);
  std::vector<double> weights(k, 0);
  for (size_t j = 0; j < k; ++j) {
    const StatisticRequest& r = requests[order[j]];
    ASSIGN_OR_RETURN(contexts[j], AccuracyContextFor(r, variables, n));
    held[j] = r.hold;
    params[j].delta = r.delta;
    double epsilon = 0;
    if (r.epsilon.has_value()) {
      epsilon = *r.epsilon;
    } else if (r.accuracy.has_value()) {
      ASSIGN_OR_RETURN(epsilon, AccuracyToEpsilon(r.kind, *r.accuracy, r.alpha,
                                                  contexts[j]));
    } else if (r.hold) {
      return absl::InvalidArgumentError(absl::StrCat(
          "request '", r.id, "' is held but has neither epsilon nor accuracy"));
    } else {
      epsilon = 1;
    }
    if (r.hold) {
      params[j].epsilon = epsilon;
    } else {
      weights[j] = epsilon;
    }
  }

  // Unheld weights relative to the largest one.
  const double max_weight =
      k == 0 ? 0 : *std::max_element(weights.begin(), weights.end());
  for (size_t j = 0; j < k; ++j) {
    if (held[j]) continue;
    weights[j] = Canonical(weights[j] / max_weight);
    params[j].epsilon = weights[j];
  }

  std::vector<PrivacyParams> held_only;
  std::vector<std::string> held_ids;
  for (size_t j = 0; j < k; ++j) {
    if (!held[j]) continue;
    held_only.push_back(params[j]);
    held_ids.push_back(requests[order[j]].id);
  }
  if (!CheckWithinBudget(held_only, target)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "held statistics exceed the budget (epsilon ", target.epsilon,
        ", delta ", target.delta, "): ", absl::StrJoin(held_ids, ", ")));
  }

  // std::vector<bool> is not contiguous.
  auto mask = std::make_unique<bool[]>(k);
  std::copy(held.begin(), held.end(), mask.get());
  ASSIGN_OR_RETURN(const double scale,
                   MaxScaleFactor(params, std::span<const bool>(mask.get(), k),
                                  target));
  for (size_t j = 0; j < k; ++j) {
    if (!held[j]) params[j].epsilon = weights[j] * scale;
  }

  RepartitionResult out;
  out.target = target;
  out.scale_factor = scale;
  out.requests.assign(requests.begin(), requests.end());
  for (size_t j = 0; j < k; ++j) {
    StatisticRequest& r = out.requests[order[j]];
    r.epsilon = params[j].epsilon;
    if (params[j].epsilon > 0) {
      ASSIGN_OR_RETURN(r.accuracy, EpsilonToAccuracy(r.kind, params[j].epsilon,
                                                     r.alpha, contexts[j]));
    } else {
      r.accuracy.reset();
      out.warnings.push_back(
          absl::StrCat("request '", r.id, "' receives no budget"));
    }
  }
  out.basic_total = BasicCompose(params);
  if (k > 0) {
    ASSIGN_OR_RETURN(out.composed_epsilon, ComposeOptimal(params, target.delta));
  }
  if (!held_only.empty() && held_only.size() == k) {
    const double left = target.epsilon - out.composed_epsilon;
    if (left > 1e-6 * target.epsilon) {
      out.warnings.push_back(absl::StrFormat(
          "every statistic is held; %g epsilon is left unused", left));
    }
  }
  return out;
}

}  // namespace dpr
