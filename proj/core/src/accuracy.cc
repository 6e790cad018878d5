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

#include "dpr/accuracy.h"

#include <bit>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

absl::Status CheckAlpha(double alpha) {
  if (!(alpha > 0 && alpha < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must lie in (0, 1), got ", alpha));
  }
  return absl::OkStatus();
}

absl::Status CheckContext(StatisticKind kind, const AccuracyContext& c) {
  if (c.n < 1) {
    return absl::InvalidArgumentError("accuracy needs a record count n >= 1");
  }
  switch (kind) {
    case StatisticKind::kMean:
      if (!(c.range_width > 0) || !std::isfinite(c.range_width)) {
        return absl::InvalidArgumentError("mean needs a positive range width");
      }
      break;
    case StatisticKind::kHistogram:
      if (c.bins < 1) {
        return absl::InvalidArgumentError("histogram needs at least one bin");
      }
      break;
    case StatisticKind::kCdf:
      if (c.grid_size < 2 ||
          !std::has_single_bit(static_cast<uint64_t>(c.grid_size))) {
        return absl::InvalidArgumentError(absl::StrCat(
            "CDF grid size must be a power of two >= 2, got ", c.grid_size));
      }
      break;
    case StatisticKind::kQuantile:
      if (c.candidates < 1) {
        return absl::InvalidArgumentError(
            "quantile needs at least one candidate cell");
      }
      break;
    default:
      return absl::UnimplementedError("unsupported statistic kind");
  }
  return absl::OkStatus();
}

double CdfLevels(const AccuracyContext& c) {
  return static_cast<double>(std::bit_width(static_cast<uint64_t>(c.grid_size)) - 1);
}

// Accuracy per unit of 1/epsilon for the kinds where t is proportional to
// 1/epsilon.
double InverseEpsilonCoefficient(StatisticKind kind, double alpha,
                                 const AccuracyContext& c) {
  const double n = static_cast<double>(c.n);
  switch (kind) {
    case StatisticKind::kMean:
      return c.range_width * std::log(1 / alpha) / n;
    case StatisticKind::kHistogram:
      return 2 * std::log(static_cast<double>(c.bins) / alpha);
    case StatisticKind::kCdf: {
      const double levels = CdfLevels(c);
      return levels * 2 * levels * std::log(levels / alpha) / n;
    }
    case StatisticKind::kQuantile:
      return 2 *
             (std::log(static_cast<double>(c.candidates)) +
              std::log(1 / alpha)) /
             n;
  }
  return 0;
}

double SnappedMeanAccuracy(double epsilon, double alpha,
                           const AccuracyContext& c) {
  const double scale = c.range_width / (static_cast<double>(c.n) * epsilon);
  return scale * std::log(1 / alpha) + SnappingGrid(scale) / 2;
}

}  // namespace

double SnappingGrid(double noise_scale) {
  return std::exp2(std::ceil(std::log2(noise_scale)));
}

absl::StatusOr<double> EpsilonToAccuracy(StatisticKind kind, double epsilon,
                                         double alpha,
                                         const AccuracyContext& context) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  RETURN_IF_ERROR(CheckAlpha(alpha));
  RETURN_IF_ERROR(CheckContext(kind, context));
  if (kind == StatisticKind::kMean && context.snapping) {
    return SnappedMeanAccuracy(epsilon, alpha, context);
  }
  return InverseEpsilonCoefficient(kind, alpha, context) / epsilon;
}

absl::StatusOr<double> AccuracyToEpsilon(StatisticKind kind, double accuracy,
                                         double alpha,
                                         const AccuracyContext& context,
                                         double max_epsilon) {
  if (!(accuracy > 0) || !std::isfinite(accuracy)) {
    return absl::InvalidArgumentError(
        absl::StrCat("accuracy must be positive and finite, got ", accuracy));
  }
  RETURN_IF_ERROR(CheckAlpha(alpha));
  RETURN_IF_ERROR(CheckContext(kind, context));

  double epsilon;
  if (kind == StatisticKind::kMean && context.snapping) {
    // Piecewise (the rounding grid jumps by powers of two) but strictly
    // decreasing in epsilon: bisect for the least epsilon that meets t.
    if (SnappedMeanAccuracy(max_epsilon, alpha, context) > accuracy) {
      epsilon = std::numeric_limits<double>::infinity();
    } else {
      double lo = 0, hi = max_epsilon;
      for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (SnappedMeanAccuracy(mid, alpha, context) <= accuracy) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      epsilon = hi;
    }
  } else {
    epsilon = InverseEpsilonCoefficient(kind, alpha, context) / accuracy;
  }
  if (!(epsilon <= max_epsilon)) {
    return absl::OutOfRangeError(absl::StrCat(
        "accuracy ", accuracy, " for ", std::string(StatisticKindName(kind)),
        " needs epsilon ", epsilon, " above the ceiling ", max_epsilon));
  }
  return epsilon;
}

}  // namespace dpr
