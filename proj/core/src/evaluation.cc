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

#include "dpr/evaluation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "absl/strings/str_cat.h"
#include "dpr/budgeter.h"
#include "dpr/ledger_store.h"
#include "dpr/mechanisms.h"
#include "dpr/release_engine.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Column generators, cycled over the variables.
struct Generator {
  std::string prefix;
  double lower;
  double upper;
  std::function<double(std::mt19937_64&, double)> draw;
};

std::vector<Generator> Generators() {
  return {
      {"age", 0, 100,
       [](std::mt19937_64& g, double) {
         return std::normal_distribution<double>(42, 18)(g);
       }},
      {"income", 0, 250000,
       [](std::mt19937_64& g, double shift) {
         return std::lognormal_distribution<double>(10.4 + shift, 0.9)(g);
       }},
      {"hours", 0, 99,
       [](std::mt19937_64& g, double) {
         return std::round(std::normal_distribution<double>(38, 13)(g));
       }},
      {"education", 1, 24,
       [](std::mt19937_64& g, double shift) {
         return 1.0 + std::binomial_distribution<int>(23, 0.5 + shift / 4)(g);
       }},
      {"flag", 0, 1,
       [](std::mt19937_64& g, double shift) {
         return std::bernoulli_distribution(0.25 + shift)(g) ? 1.0 : 0.0;
       }},
      {"commute", 0, 120,
       [](std::mt19937_64& g, double) {
         return std::uniform_real_distribution<double>(0, 120)(g);
       }},
  };
}

double NormalizedError(const ReleaseValue& released, const Column& column,
                       const StatisticRequest& request) {
  const VariableSpec& spec = column.spec;
  const double n = static_cast<double>(spec.n);
  switch (request.kind) {
    case StatisticKind::kMean: {
      double sum = 0;
      for (double x : column.values) {
        if (!std::isnan(x)) sum += x;
      }
      return std::abs(released.scalar() - sum / n) / (spec.upper - spec.lower);
    }
    case StatisticKind::kHistogram: {
      const std::vector<double>& edges = released.grid();
      std::vector<double> counts(edges.size() - 1, 0);
      for (double x : column.values) {
        if (std::isnan(x)) continue;
        const size_t i = static_cast<size_t>(
            std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
        counts[std::min(i == 0 ? 0 : i - 1, counts.size() - 1)] += 1;
      }
      double error = 0;
      for (size_t i = 0; i < counts.size(); ++i) {
        error += std::abs(released.values()[i] - counts[i]) / n;
      }
      return error / static_cast<double>(counts.size());
    }
    case StatisticKind::kCdf: {
      const size_t g = released.values().size();
      const double cell = (spec.upper - spec.lower) / static_cast<double>(g);
      std::vector<double> leaves(g, 0);
      for (double x : column.values) {
        if (std::isnan(x)) continue;
        const double pos = (x - spec.lower) / cell;
        leaves[std::min(static_cast<size_t>(pos), g - 1)] += 1;
      }
      double cumulative = 0, error = 0;
      for (size_t j = 0; j < g; ++j) {
        cumulative += leaves[j];
        error += std::abs(released.values()[j] - cumulative / n);
      }
      return error / static_cast<double>(g);
    }
    case StatisticKind::kQuantile:
      break;
  }
  return std::nan("");
}

}  // namespace

absl::StatusOr<SyntheticData> SyntheticCensusData(int64_t n, int variables,
                                                  uint64_t seed) {
  if (n < 1 || variables < 1) {
    return absl::InvalidArgumentError("need n >= 1 and at least one variable");
  }
  const std::vector<Generator> generators = Generators();
  Schema schema;
  schema.dataset_id = absl::StrCat("synthetic-census-", seed);
  std::vector<std::vector<double>> values;
  std::mt19937_64 rng(seed);
  for (int v = 0; v < variables; ++v) {
    const Generator& gen = generators[static_cast<size_t>(v) % generators.size()];
    const int round = v / static_cast<int>(generators.size());
    VariableSpec spec;
    spec.name = absl::StrCat(gen.prefix, "_", round);
    spec.kind = VariableKind::kNumeric;
    spec.lower = gen.lower;
    spec.upper = gen.upper;
    schema.variables.push_back(spec);
    // Later rounds of the same generator drift a little.
    const double shift = 0.05 * (round % 5);
    std::vector<double> column(static_cast<size_t>(n));
    for (double& x : column) x = gen.draw(rng, shift);
    values.push_back(std::move(column));
  }
  ASSIGN_OR_RETURN(Dataset dataset, DatasetFromColumns(schema, std::move(values)));
  return SyntheticData{std::move(schema),
                       std::make_shared<const Dataset>(std::move(dataset))};
}

absl::StatusOr<CombinedReleaseResult> RunCombinedRelease(
    const CombinedReleaseConfig& config) {
  ASSIGN_OR_RETURN(const SyntheticData data,
                   SyntheticCensusData(config.n, config.variables, config.seed));
  return RunCombinedRelease(data, config);
}

absl::StatusOr<CombinedReleaseResult> RunCombinedRelease(
    const SyntheticData& data, const CombinedReleaseConfig& config) {
  const Dataset& dataset = *data.dataset;
  std::vector<StatisticRequest> requests;
  for (const VariableSpec& v : data.schema.variables) {
    for (const StatisticKind kind :
         {StatisticKind::kMean, StatisticKind::kHistogram, StatisticKind::kCdf}) {
      StatisticRequest r;
      r.id = absl::StrCat(v.name, ".", std::string(StatisticKindName(kind)));
      r.variable = v.name;
      r.kind = kind;
      r.bins = config.histogram_bins;
      r.grid_size = config.cdf_grid;
      requests.push_back(std::move(r));
    }
  }

  CombinedReleaseResult result;
  ASSIGN_OR_RETURN(const GlobalBudget budget,
                   SplitBudget(config.global, config.global, config.global.epsilon));
  auto plan_start = Clock::now();
  ASSIGN_OR_RETURN(const RepartitionResult plan,
                   Repartition(requests, dataset.variables(), dataset.n(),
                               budget.depositor));
  result.plan_seconds = Seconds(plan_start);
  result.composed_epsilon = plan.composed_epsilon;
  result.basic_epsilon = plan.basic_total.epsilon;

  LedgerConfig ledger_config;
  ledger_config.budget = budget;
  ASSIGN_OR_RETURN(std::unique_ptr<LedgerStore> ledger,
                   LedgerStore::Open("", ledger_config));
  ASSIGN_OR_RETURN(
      std::unique_ptr<ReleaseEngine> engine,
      ReleaseEngine::Create(data.schema, data.dataset, std::move(ledger),
                            SecureRandom::Deterministic(config.seed)));
  ReleaseBatch batch;
  batch.requests = plan.requests;
  batch.claimed_total = PrivacyParams{plan.composed_epsilon, budget.depositor.delta};

  const auto release_start = Clock::now();
  ASSIGN_OR_RETURN(const ExecuteResult executed,
                   engine->Execute(Tier::kDepositor, "depositor", batch));
  result.release_seconds = Seconds(release_start);
  if (!executed.accepted) {
    return absl::FailedPreconditionError(
        absl::StrCat("release rejected: ", executed.reason));
  }

  double sums[3] = {0, 0, 0};
  int counts[3] = {0, 0, 0};
  for (size_t i = 0; i < executed.records.size(); ++i) {
    const ReleaseRecord& record = executed.records[i];
    const StatisticRequest& request = plan.requests[i];
    const Column* column = dataset.Find(request.variable);
    StatisticError e;
    e.request_id = record.request_id;
    e.variable = request.variable;
    e.kind = request.kind;
    e.epsilon = record.value.epsilon_spent();
    e.accuracy = record.value.accuracy();
    e.normalized_error = NormalizedError(record.value, *column, request);
    const int k = static_cast<int>(request.kind);
    sums[k] += e.normalized_error;
    counts[k] += 1;
    result.errors.push_back(std::move(e));
  }
  result.mean_error_means = counts[0] ? sums[0] / counts[0] : 0;
  result.mean_error_histograms = counts[1] ? sums[1] / counts[1] : 0;
  result.mean_error_cdfs = counts[2] ? sums[2] / counts[2] : 0;
  double total = 0;
  for (const StatisticError& e : result.errors) total += e.normalized_error;
  result.mean_normalized_error =
      result.errors.empty() ? 0 : total / static_cast<double>(result.errors.size());
  return result;
}

LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

absl::StatusOr<TrendResult> RunTrendExperiment(const TrendConfig& config) {
  if (config.surveys < 2 || config.last_year <= config.first_year) {
    return absl::InvalidArgumentError("need at least two surveys over a time span");
  }
  std::mt19937_64 data_rng(config.seed);
  SecureRandom noise = SecureRandom::Deterministic(config.seed ^ 0x5eedULL);
  TrendResult result;
  VariableSpec spec;
  spec.name = "favor";
  spec.kind = VariableKind::kBoolean;
  spec.lower = 0;
  spec.upper = 1;
  const double span = config.last_year - config.first_year;
  const double sd = 0.15 * static_cast<double>(config.mean_sample_size);
  for (int s = 0; s < config.surveys; ++s) {
    const double t = config.first_year + span * s / (config.surveys - 1);
    const double share = config.start_share +
                         (config.end_share - config.start_share) *
                             (t - config.first_year) / span;
    const int64_t size = std::max<int64_t>(
        200, std::llround(std::normal_distribution<double>(
                 static_cast<double>(config.mean_sample_size), sd)(data_rng)));
    Column column;
    column.spec = spec;
    column.spec.n = size;
    column.values.resize(static_cast<size_t>(size));
    std::bernoulli_distribution answer(share);
    double sum = 0;
    for (double& x : column.values) {
      x = answer(data_rng) ? 1 : 0;
      sum += x;
    }
    ASSIGN_OR_RETURN(const ReleaseValue released,
                     DpMean(column, config.epsilon, noise));
    result.times.push_back(t);
    result.sample_sizes.push_back(size);
    result.true_means.push_back(sum / static_cast<double>(size));
    result.dp_means.push_back(released.scalar());
  }
  const LineFit truth = FitLine(result.times, result.true_means);
  const LineFit dp = FitLine(result.times, result.dp_means);
  result.true_slope = truth.slope;
  result.true_intercept = truth.intercept;
  result.dp_slope = dp.slope;
  result.dp_intercept = dp.intercept;
  return result;
}

}  // namespace dpr
