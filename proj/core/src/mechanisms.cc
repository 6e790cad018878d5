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

#include "dpr/mechanisms.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <functional>
#include <limits>
#include <cmath>
#include <string>
#include <unordered_map>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "dpr/accuracy.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace internal {

struct MechanismAccess {
  static ReleaseValue Make(StatisticKind kind, std::string mechanism,
                           double epsilon, double alpha, double accuracy) {
    ReleaseValue value;
    value.kind_ = kind;
    value.mechanism_ = std::move(mechanism);
    value.epsilon_spent_ = epsilon;
    value.delta_spent_ = 0;
    value.accuracy_ = accuracy;
    value.confidence_level_ = 1 - alpha;
    return value;
  }
  static std::vector<double>& values(ReleaseValue& v) { return v.values_; }
  static std::vector<double>& grid(ReleaseValue& v) { return v.grid_; }
  static std::vector<std::string>& labels(ReleaseValue& v) {
    return v.labels_;
  }
};

}  // namespace internal

namespace {

using internal::MechanismAccess;

absl::Status CheckEpsilon(double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  return absl::OkStatus();
}

absl::Status CheckColumn(const Column& column, bool numeric_only) {
  RETURN_IF_ERROR(column.spec.Validate());
  if (numeric_only && column.spec.kind == VariableKind::kCategorical) {
    return absl::InvalidArgumentError(absl::StrCat(
        "variable '", column.spec.name, "' is categorical; expected numeric"));
  }
  if (column.spec.n < 1) {
    return absl::FailedPreconditionError(absl::StrCat(
        "variable '", column.spec.name, "' has no records; nothing released"));
  }
  if (static_cast<int64_t>(column.values.size()) != column.spec.n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "variable '", column.spec.name, "' holds ", column.values.size(),
        " rows but declares n = ", column.spec.n));
  }
  return absl::OkStatus();
}

AccuracyContext ContextFor(const Column& column) {
  AccuracyContext context;
  context.n = column.spec.n;
  context.range_width = column.spec.range().width();
  return context;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && absl::ascii_isspace(s.front())) s.remove_prefix(1);
  while (!s.empty() && absl::ascii_isspace(s.back())) s.remove_suffix(1);
  return s;
}

bool ParseDouble(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

double ClampTo(double x, double lo, double hi, int64_t& clamped) {
  if (x < lo) {
    ++clamped;
    return lo;
  }
  if (x > hi) {
    ++clamped;
    return hi;
  }
  return x;
}

// Index i with edges[i] <= x < edges[i + 1]; the top edge belongs to the
// last cell.
size_t BinIndex(std::span<const double> edges, double x) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const size_t idx = static_cast<size_t>(it - edges.begin());
  if (idx == 0) return 0;
  return std::min(idx - 1, edges.size() - 2);
}

// Pool-adjacent-violators projection onto non-decreasing sequences.
void IsotonicInPlace(std::span<double> y) {
  std::vector<double> block_mean;
  std::vector<size_t> block_size;
  block_mean.reserve(y.size());
  block_size.reserve(y.size());
  for (double v : y) {
    block_mean.push_back(v);
    block_size.push_back(1);
    while (block_mean.size() > 1 &&
           block_mean[block_mean.size() - 2] > block_mean.back()) {
      const size_t s2 = block_size.back();
      const double m2 = block_mean.back();
      block_mean.pop_back();
      block_size.pop_back();
      const size_t s1 = block_size.back();
      block_mean.back() = (block_mean.back() * s1 + m2 * s2) / (s1 + s2);
      block_size.back() = s1 + s2;
    }
  }
  size_t pos = 0;
  for (size_t b = 0; b < block_mean.size(); ++b) {
    for (size_t i = 0; i < block_size[b]; ++i) y[pos++] = block_mean[b];
  }
}

bool IsPowerOfTwo(double x) {
  if (!(x > 0) || !std::isfinite(x)) return false;
  int exponent;
  return std::frexp(x, &exponent) == 0.5;
}

}  // namespace

bool IsMissingToken(std::string_view token) {
  token = Trim(token);
  return token.empty() || token == "NA" || token == "NaN" || token == "nan" ||
         token == "null" || token == ".";
}

TokenClamper::TokenClamper(const VariableSpec& spec)
    : spec_(spec), range_(spec.range()) {
  result_.column.spec = spec;
  if (spec.kind == VariableKind::kCategorical) {
    for (size_t i = 0; i < spec.categories.size(); ++i) {
      levels_.emplace(spec.categories[i], static_cast<double>(i));
    }
  }
}

void TokenClamper::Reserve(size_t rows) { result_.column.values.reserve(rows); }

absl::Status TokenClamper::Add(std::string_view raw) {
  std::vector<double>& out = result_.column.values;
  const int64_t row = static_cast<int64_t>(out.size()) + 1;
  const std::string_view token = Trim(raw);
  if (IsMissingToken(token)) {
    out.push_back(std::nan(""));
    ++result_.missing;
    return absl::OkStatus();
  }
  switch (spec_.kind) {
    case VariableKind::kCategorical: {
      const auto it = levels_.find(std::string(token));
      if (it == levels_.end()) {
        ++result_.clamped;
        out.push_back(static_cast<double>(spec_.OtherIndex()));
      } else {
        out.push_back(it->second);
      }
      return absl::OkStatus();
    }
    case VariableKind::kBoolean: {
      const std::string lower = absl::AsciiStrToLower(std::string(token));
      if (lower == "true" || lower == "t" || lower == "yes") {
        out.push_back(1);
        return absl::OkStatus();
      }
      if (lower == "false" || lower == "f" || lower == "no") {
        out.push_back(0);
        return absl::OkStatus();
      }
      [[fallthrough]];
    }
    case VariableKind::kNumeric: {
      double value;
      if (!ParseDouble(token, value)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "row ", row, ": non-numeric token '", std::string(token), "' in ",
            std::string(VariableKindName(spec_.kind)), " column '", spec_.name,
            "'"));
      }
      if (std::isnan(value)) {
        out.push_back(value);
        ++result_.missing;
      } else {
        out.push_back(ClampTo(value, range_.lo, range_.hi, result_.clamped));
      }
      return absl::OkStatus();
    }
  }
  return absl::InternalError("unknown variable kind");
}

ClampResult TokenClamper::Finish() && {
  result_.column.spec.n = static_cast<int64_t>(result_.column.values.size());
  return std::move(result_);
}

absl::StatusOr<ClampResult> ClampColumn(std::span<const std::string_view> raw,
                                        const VariableSpec& spec) {
  RETURN_IF_ERROR(spec.Validate());
  TokenClamper clamper(spec);
  clamper.Reserve(raw.size());
  for (const std::string_view token : raw) RETURN_IF_ERROR(clamper.Add(token));
  return std::move(clamper).Finish();
}

absl::StatusOr<ClampResult> ClampValues(std::span<const double> raw,
                                        const VariableSpec& spec) {
  RETURN_IF_ERROR(spec.Validate());
  if (spec.kind == VariableKind::kCategorical) {
    return absl::InvalidArgumentError(absl::StrCat(
        "variable '", spec.name, "' is categorical; pass level tokens"));
  }
  ClampResult result;
  result.column.spec = spec;
  result.column.spec.n = static_cast<int64_t>(raw.size());
  result.column.values.reserve(raw.size());
  const Interval range = spec.range();
  for (double x : raw) {
    if (std::isnan(x)) {
      ++result.missing;
      result.column.values.push_back(x);
    } else {
      result.column.values.push_back(
          ClampTo(x, range.lo, range.hi, result.clamped));
    }
  }
  return result;
}

absl::StatusOr<double> LaplaceNoise(double scale, SecureRandom& rng) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace scale must be positive and finite, got ", scale));
  }
  const double magnitude = -scale * std::log(rng.UniformFullPrecision());
  return rng.NextBit() ? magnitude : -magnitude;
}

absl::StatusOr<ReleaseValue> DpMean(const Column& column, double epsilon,
                                    SecureRandom& rng, double alpha) {
  RETURN_IF_ERROR(CheckEpsilon(epsilon));
  RETURN_IF_ERROR(CheckColumn(column, /*numeric_only=*/true));
  const Interval range = column.spec.range();
  const double n = static_cast<double>(column.spec.n);

  double sum = 0;
  for (double x : column.values) {
    if (!std::isnan(x)) sum += std::clamp(x, range.lo, range.hi);
  }
  ASSIGN_OR_RETURN(const double accuracy,
                   EpsilonToAccuracy(StatisticKind::kMean, epsilon, alpha,
                                     ContextFor(column)));
  ASSIGN_OR_RETURN(const double noise,
                   LaplaceNoise(range.width() / (n * epsilon), rng));

  ReleaseValue release = MechanismAccess::Make(
      StatisticKind::kMean, "laplace", epsilon, alpha, accuracy);
  MechanismAccess::values(release) = {
      std::clamp(sum / n + noise, range.lo, range.hi)};
  return release;
}

HistogramBins HistogramBins::Uniform(double lower, double upper, int bins) {
  HistogramBins out;
  out.edges.resize(static_cast<size_t>(std::max(bins, 1)) + 1);
  const double width = (upper - lower) / static_cast<double>(bins);
  for (size_t i = 0; i < out.edges.size(); ++i) {
    out.edges[i] = lower + width * static_cast<double>(i);
  }
  out.edges.back() = upper;
  return out;
}

absl::StatusOr<ReleaseValue> DpHistogram(const Column& column, double epsilon,
                                         const HistogramBins& bins,
                                         SecureRandom& rng, double alpha) {
  RETURN_IF_ERROR(CheckEpsilon(epsilon));
  RETURN_IF_ERROR(CheckColumn(column, /*numeric_only=*/false));
  const VariableSpec& spec = column.spec;

  std::vector<double> counts;
  std::vector<double> edges;
  std::vector<std::string> labels;
  switch (spec.kind) {
    case VariableKind::kCategorical: {
      counts.assign(spec.CategoryCount(), 0);
      labels = spec.categories;
      labels.emplace_back(kOtherCategory);
      const double other = static_cast<double>(spec.OtherIndex());
      for (double x : column.values) {
        if (std::isnan(x)) continue;
        const double level = std::clamp(std::round(x), 0.0, other);
        counts[static_cast<size_t>(level)] += 1;
      }
      break;
    }
    case VariableKind::kBoolean: {
      counts.assign(2, 0);
      labels = {"false", "true"};
      for (double x : column.values) {
        if (std::isnan(x)) continue;
        counts[x >= 0.5 ? 1 : 0] += 1;
      }
      break;
    }
    case VariableKind::kNumeric: {
      edges = bins.edges;
      if (edges.size() < 2 || edges.front() != spec.lower ||
          edges.back() != spec.upper ||
          std::adjacent_find(edges.begin(), edges.end(),
                             std::greater_equal<double>()) != edges.end()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "histogram bins for '", spec.name,
            "' must be strictly increasing edges covering [", spec.lower,
            ", ", spec.upper, "]"));
      }
      counts.assign(edges.size() - 1, 0);
      for (double x : column.values) {
        if (std::isnan(x)) continue;
        counts[BinIndex(edges, std::clamp(x, spec.lower, spec.upper))] += 1;
      }
      break;
    }
  }

  AccuracyContext context = ContextFor(column);
  context.bins = static_cast<int64_t>(counts.size());
  ASSIGN_OR_RETURN(const double accuracy,
                   EpsilonToAccuracy(StatisticKind::kHistogram, epsilon,
                                     alpha, context));
  const double scale = 2 / epsilon;
  for (double& c : counts) {
    ASSIGN_OR_RETURN(const double noise, LaplaceNoise(scale, rng));
    c = std::max(0.0, c + noise);
  }

  ReleaseValue release = MechanismAccess::Make(
      StatisticKind::kHistogram, "laplace", epsilon, alpha, accuracy);
  MechanismAccess::values(release) = std::move(counts);
  MechanismAccess::grid(release) = std::move(edges);
  MechanismAccess::labels(release) = std::move(labels);
  return release;
}

absl::StatusOr<ReleaseValue> DpCdf(const Column& column, double epsilon,
                                   int64_t grid_size, SecureRandom& rng,
                                   double alpha) {
  RETURN_IF_ERROR(CheckEpsilon(epsilon));
  RETURN_IF_ERROR(CheckColumn(column, /*numeric_only=*/true));
  if (grid_size < 2 || !std::has_single_bit(static_cast<uint64_t>(grid_size))) {
    return absl::InvalidArgumentError(absl::StrCat(
        "CDF grid size must be a power of two >= 2, got ", grid_size));
  }
  const Interval range = column.spec.range();
  const size_t g = static_cast<size_t>(grid_size);
  const int levels = std::bit_width(g) - 1;
  const double cell = range.width() / static_cast<double>(g);

  // tree[l] holds the 2^l node counts of level l; tree[levels] is the leaves.
  std::vector<std::vector<double>> tree(levels + 1);
  tree[levels].assign(g, 0);
  for (double x : column.values) {
    if (std::isnan(x)) continue;
    const double pos = (std::clamp(x, range.lo, range.hi) - range.lo) / cell;
    const size_t leaf = std::min(static_cast<size_t>(pos), g - 1);
    tree[levels][leaf] += 1;
  }
  for (int l = levels - 1; l >= 1; --l) {
    tree[l].resize(size_t{1} << l);
    for (size_t i = 0; i < tree[l].size(); ++i) {
      tree[l][i] = tree[l + 1][2 * i] + tree[l + 1][2 * i + 1];
    }
  }
  const double scale = 2.0 * levels / epsilon;
  for (int l = 1; l <= levels; ++l) {
    for (double& node : tree[l]) {
      ASSIGN_OR_RETURN(const double noise, LaplaceNoise(scale, rng));
      node += noise;
    }
  }

  const double n = static_cast<double>(column.spec.n);
  std::vector<double> cdf(g);
  std::vector<double> grid(g);
  for (size_t j = 0; j < g; ++j) {
    grid[j] = range.lo + cell * static_cast<double>(j + 1);
    if (j + 1 == g) break;
    // Prefix of p = j + 1 leaves: one node per set bit of p.
    const size_t p = j + 1;
    double sum = 0;
    size_t covered = 0;
    for (int l = 1; l <= levels; ++l) {
      const size_t node_width = g >> l;
      if (p & node_width) {
        sum += tree[l][covered / node_width];
        covered += node_width;
      }
    }
    cdf[j] = sum / n;
  }
  grid.back() = range.hi;
  IsotonicInPlace(std::span<double>(cdf.data(), g - 1));
  for (double& v : cdf) v = std::clamp(v, 0.0, 1.0);
  cdf.back() = 1;

  AccuracyContext context = ContextFor(column);
  context.grid_size = grid_size;
  ASSIGN_OR_RETURN(const double accuracy,
                   EpsilonToAccuracy(StatisticKind::kCdf, epsilon, alpha,
                                     context));
  ReleaseValue release = MechanismAccess::Make(
      StatisticKind::kCdf, "dyadic-laplace", epsilon, alpha, accuracy);
  MechanismAccess::values(release) = std::move(cdf);
  MechanismAccess::grid(release) = std::move(grid);
  return release;
}

absl::StatusOr<ReleaseValue> DpQuantile(const Column& column, double epsilon,
                                        double quantile, SecureRandom& rng,
                                        int64_t candidates, double alpha) {
  RETURN_IF_ERROR(CheckEpsilon(epsilon));
  RETURN_IF_ERROR(CheckColumn(column, /*numeric_only=*/true));
  if (!(quantile > 0 && quantile < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("quantile must lie in (0, 1), got ", quantile));
  }
  if (candidates < 1) {
    return absl::InvalidArgumentError("quantile needs at least one candidate");
  }
  const Interval range = column.spec.range();
  const size_t m = static_cast<size_t>(candidates);
  const double cell = range.width() / static_cast<double>(m);

  std::vector<double> counts(m, 0);
  for (double x : column.values) {
    if (std::isnan(x)) continue;
    const double pos = (std::clamp(x, range.lo, range.hi) - range.lo) / cell;
    counts[std::min(static_cast<size_t>(pos), m - 1)] += 1;
  }
  const double target = quantile * static_cast<double>(column.spec.n);
  std::vector<double> log_weight(m);
  double below = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < m; ++i) {
    const double through = below + counts[i];
    const double distance = std::max({0.0, below - target, target - through});
    log_weight[i] = -epsilon * distance / 2;
    best = std::max(best, log_weight[i]);
    below = through;
  }
  double total = 0;
  for (double& w : log_weight) {
    w = std::exp(w - best);
    total += w;
  }
  const double pick = rng.UniformDouble() * total;
  size_t chosen = m - 1;
  double cumulative = 0;
  for (size_t i = 0; i < m; ++i) {
    cumulative += log_weight[i];
    if (pick < cumulative) {
      chosen = i;
      break;
    }
  }

  AccuracyContext context = ContextFor(column);
  context.candidates = candidates;
  ASSIGN_OR_RETURN(const double accuracy,
                   EpsilonToAccuracy(StatisticKind::kQuantile, epsilon, alpha,
                                     context));
  ReleaseValue release = MechanismAccess::Make(
      StatisticKind::kQuantile, "exponential", epsilon, alpha, accuracy);
  MechanismAccess::values(release) = {
      range.lo + cell * (static_cast<double>(chosen) + 0.5)};
  return release;
}

absl::StatusOr<double> Snap(double true_value, const SnapParams& params,
                            double epsilon, SecureRandom& rng) {
  RETURN_IF_ERROR(CheckEpsilon(epsilon));
  if (!(params.bound > 0) || !std::isfinite(params.bound)) {
    return absl::InvalidArgumentError("snapping bound must be positive");
  }
  if (!(params.sensitivity > 0) || !std::isfinite(params.sensitivity)) {
    return absl::InvalidArgumentError("snapping sensitivity must be positive");
  }
  if (!IsPowerOfTwo(params.grid)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "snapping grid must be a power of two, got ", params.grid));
  }
  if (params.grid > 2 * params.bound) {
    return absl::InvalidArgumentError(absl::StrCat(
        "snapping grid ", params.grid, " exceeds twice the bound ",
        params.bound));
  }
  // Largest grid point inside the bound; the output range is symmetric.
  const double limit = std::floor(params.bound / params.grid) * params.grid;
  const double scale = params.sensitivity / epsilon;
  const double sign = rng.NextBit() ? 1.0 : -1.0;
  const double noisy =
      std::clamp(true_value, -params.bound, params.bound) +
      scale * sign * std::log(rng.UniformFullPrecision());
  const double rounded = std::nearbyint(noisy / params.grid) * params.grid;
  return std::clamp(rounded, -limit, limit);
}

absl::StatusOr<ReleaseValue> DpMeanSnapping(const Column& column,
                                            double epsilon, SecureRandom& rng,
                                            double alpha) {
  RETURN_IF_ERROR(CheckEpsilon(epsilon));
  RETURN_IF_ERROR(CheckColumn(column, /*numeric_only=*/true));
  const Interval range = column.spec.range();
  const double n = static_cast<double>(column.spec.n);
  const double center = 0.5 * (range.lo + range.hi);

  SnapParams params;
  params.bound = range.width() / 2;
  params.sensitivity = range.width() / n;
  params.grid = SnappingGrid(params.sensitivity / epsilon);
  if (params.grid > 2 * params.bound) {
    return absl::FailedPreconditionError(absl::StrCat(
        "snapping grid ", params.grid, " is wider than the range of '",
        column.spec.name, "'; n * epsilon is too small"));
  }

  double sum = 0;
  for (double x : column.values) {
    if (!std::isnan(x)) sum += std::clamp(x, range.lo, range.hi);
  }
  ASSIGN_OR_RETURN(const double snapped,
                   Snap(sum / n - center, params, epsilon, rng));

  AccuracyContext context = ContextFor(column);
  context.snapping = true;
  ASSIGN_OR_RETURN(const double accuracy,
                   EpsilonToAccuracy(StatisticKind::kMean, epsilon, alpha,
                                     context));
  ReleaseValue release = MechanismAccess::Make(
      StatisticKind::kMean, "snapping", epsilon, alpha, accuracy);
  MechanismAccess::values(release) = {center + snapped};
  return release;
}

}  // namespace dpr
