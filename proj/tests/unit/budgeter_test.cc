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
#include <random>
#include <vector>

#include "dpr/accuracy.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpr {
namespace {

using ::dpr::testing::Categorical;
using ::dpr::testing::Numeric;

TEST(VetTest, SwappedParametersRejectedWithHint) {
  const VetResult r = VetGlobalParams({1e-6, 0.25});
  EXPECT_FALSE(r.accepted);
  EXPECT_NE(r.reason.find("swapped"), std::string::npos) << r.reason;
}

TEST(VetTest, TypicalParametersAcceptedQuietly) {
  const VetResult r = VetGlobalParams({0.3, std::ldexp(1.0, -20)});
  EXPECT_TRUE(r.accepted);
  // 2^-20 is just under 1e-6.
  EXPECT_TRUE(r.warnings.empty());
}

TEST(VetTest, LargeEpsilonWarnsOnly) {
  const VetResult r = VetGlobalParams({5, std::ldexp(1.0, -30)});
  EXPECT_TRUE(r.accepted);
  ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(VetTest, Rejections) {
  EXPECT_FALSE(VetGlobalParams({0, 1e-8}).accepted);
  EXPECT_FALSE(VetGlobalParams({-1, 1e-8}).accepted);
  EXPECT_FALSE(VetGlobalParams({INFINITY, 1e-8}).accepted);
  EXPECT_FALSE(VetGlobalParams({0.5, 1e-4}).accepted);
  EXPECT_TRUE(VetGlobalParams({0.5, 9.9e-5}).accepted);
  EXPECT_EQ(VetGlobalParams({0.5, 5e-6}).warnings.size(), 1u);
}

TEST(AmplifyTest, HundredfoldPopulation) {
  const PrivacyParams global{0.5, 1e-9};
  const absl::StatusOr<PrivacyParams> eff =
      AmplifyBudget(global, {true, 1000, 100000});
  DPR_ASSERT_OK(eff);
  EXPECT_NEAR(eff->epsilon, std::log(51.0), 1e-12);
  EXPECT_NEAR(eff->epsilon, 3.932, 1e-3);
  EXPECT_NEAR(eff->delta, 1e-7, 1e-20);
  EXPECT_LE(std::expm1(eff->epsilon) / 100, 0.5 + 1e-12);
}

TEST(AmplifyTest, DeltaCapped) {
  const absl::StatusOr<PrivacyParams> eff =
      AmplifyBudget({0.5, 1e-6}, {true, 10, 1e6});
  DPR_ASSERT_OK(eff);
  EXPECT_EQ(eff->delta, kMaxGlobalDelta);
}

TEST(AmplifyTest, NotSecretIsIdentity) {
  const PrivacyParams global{0.5, 1e-9};
  EXPECT_EQ(*AmplifyBudget(global, {false, 1000, 100000}), global);
}

TEST(AmplifyTest, NoGainReturnsGlobal) {
  // m = n: ln(1 + eps) < eps.
  const PrivacyParams global{0.5, 1e-9};
  EXPECT_EQ(*AmplifyBudget(global, {true, 1000, 1000}), global);
}

TEST(AmplifyTest, PopulationBelowSampleRejected) {
  EXPECT_FALSE(AmplifyBudget({0.5, 1e-9}, {true, 1000, 999}).ok());
}

TEST(AmplifyPropertyTest, PlugBackAndMonotone) {
  for (double eps : {0.01, 0.1, 0.3, 0.5, 1.0, 2.0}) {
    double previous = 0;
    for (double ratio : {1.0, 1.5, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4, 1e6}) {
      const SampleInfo s{true, 1000, 1000 * ratio};
      const PrivacyParams global{eps, 1e-10};
      const PrivacyParams eff = *AmplifyBudget(global, s);
      // Subsampled guarantee of the effective budget.
      EXPECT_LE(std::log1p(std::expm1(eff.epsilon) / ratio), eps * (1 + 1e-12));
      if (eff.epsilon > eps) {
        EXPECT_LE(std::expm1(eff.epsilon) / ratio, eps * (1 + 1e-12));
      }
      EXPECT_LE(eff.delta / ratio, global.delta * (1 + 1e-12));
      EXPECT_GE(eff.epsilon, previous);
      previous = eff.epsilon;
    }
  }
}

TEST(SplitTest, Examples) {
  const PrivacyParams global{1.0, 1e-6};
  GlobalBudget b = *SplitBudget(global, global, 0.6);
  EXPECT_NEAR(b.analyst.epsilon, 0.4, 1e-15);
  EXPECT_NEAR(b.depositor.delta, 0.6e-6, 1e-20);
  EXPECT_NEAR(b.analyst.delta, 0.4e-6, 1e-20);
  b = *SplitBudget(global, global, 1.0);
  EXPECT_EQ(b.analyst.epsilon, 0);
  b = *SplitBudget(global, global, 0);
  EXPECT_EQ(b.analyst, global);
  EXPECT_EQ(SplitBudget(global, global, 1.1).status().code(),
            absl::StatusCode::kFailedPrecondition);
}

StatisticRequest Request(std::string id, std::string variable, StatisticKind kind) {
  StatisticRequest r;
  r.id = std::move(id);
  r.variable = std::move(variable);
  r.kind = kind;
  return r;
}

class RepartitionTest : public ::testing::Test {
 protected:
  static constexpr int64_t kN = 1000;
  RepartitionTest() {
    std::vector<VariableSpec> v = {Numeric("age", 18, 90, kN),
                                   Numeric("income", 0, 1e5, kN),
                                   Categorical("race", {"a", "b", "c", "d"}, kN)};
    variables_ = MakeVariableMap(v);
  }
  std::vector<StatisticRequest> Mixed() const {
    std::vector<StatisticRequest> out = {
        Request("mean_age", "age", StatisticKind::kMean),
        Request("hist_race", "race", StatisticKind::kHistogram),
        Request("cdf_income", "income", StatisticKind::kCdf),
        Request("median_income", "income", StatisticKind::kQuantile),
        Request("mean_income", "income", StatisticKind::kMean)};
    out[4].accuracy = 2000;
    return out;
  }
  VariableMap variables_;
  const PrivacyParams target_{1.0, 1e-6};
};

TEST_F(RepartitionTest, SingleMeanGetsWholeBudget) {
  const std::vector<StatisticRequest> one = {Request("m", "age", StatisticKind::kMean)};
  const absl::StatusOr<RepartitionResult> r = Repartition(one, variables_, kN, target_);
  DPR_ASSERT_OK(r);
  ASSERT_EQ(r->requests.size(), 1u);
  // Largest pure epsilon whose composition at delta 1e-6 stays within 1.
  const double whole = std::log((std::exp(1.0) + 1e-6) / (1 - 1e-6));
  EXPECT_LE(*r->requests[0].epsilon, whole * (1 + 1e-12));
  EXPECT_GE(*r->requests[0].epsilon, whole * (1 - 2e-6));
  AccuracyContext c;
  c.n = kN;
  c.range_width = 72;
  EXPECT_NEAR(*r->requests[0].accuracy,
              72 * std::log(20.0) / (kN * *r->requests[0].epsilon), 1e-12);
}

TEST_F(RepartitionTest, HeldEpsilonPreservedOthersRescaled) {
  std::vector<StatisticRequest> reqs = Mixed();
  reqs[0].hold = true;
  reqs[0].epsilon = 0.1;
  reqs[1].hold = true;
  reqs[1].accuracy = 60;
  const absl::StatusOr<RepartitionResult> r = Repartition(reqs, variables_, kN, target_);
  DPR_ASSERT_OK(r);
  EXPECT_EQ(*r->requests[0].epsilon, 0.1);
  AccuracyContext hist;
  hist.n = kN;
  hist.bins = 5;
  const double hist_eps = *AccuracyToEpsilon(StatisticKind::kHistogram, 60, kDefaultAlpha, hist);
  EXPECT_EQ(*r->requests[1].epsilon, hist_eps);
  EXPECT_NEAR(*r->requests[1].accuracy, 60, 1e-9);

  std::vector<PrivacyParams> params;
  for (const StatisticRequest& q : r->requests) params.push_back({*q.epsilon, q.delta});
  EXPECT_TRUE(CheckWithinBudget(params, target_));
  // Oracle: unheld weights are the initial epsilons (1 each, or the one
  // implied by the accuracy target) relative to the largest, times the
  // maximal factor.
  AccuracyContext mean_income;
  mean_income.n = kN;
  mean_income.range_width = 1e5;
  const double implied = *AccuracyToEpsilon(StatisticKind::kMean, 2000, kDefaultAlpha, mean_income);
  const double top = std::max(1.0, implied);
  std::vector<PrivacyParams> start = {{0.1, 0}, {hist_eps, 0}, {1 / top, 0},
                                      {1 / top, 0}, {implied / top, 0}};
  const bool held[] = {true, true, false, false, false};
  const double c = *MaxScaleFactor(start, held, target_);
  EXPECT_NEAR(*r->requests[2].epsilon, c / top, 1e-6 * c);
  EXPECT_NEAR(*r->requests[4].epsilon / *r->requests[2].epsilon, implied, 1e-9 * implied);
}

TEST_F(RepartitionTest, InfeasibleHoldsListed) {
  std::vector<StatisticRequest> reqs = Mixed();
  reqs[0].hold = true;
  reqs[0].epsilon = 0.8;
  reqs[2].hold = true;
  reqs[2].epsilon = 0.7;
  const absl::StatusOr<RepartitionResult> r = Repartition(reqs, variables_, kN, target_);
  ASSERT_EQ(r.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_NE(r.status().message().find("mean_age"), std::string::npos);
  EXPECT_NE(r.status().message().find("cdf_income"), std::string::npos);
}

TEST_F(RepartitionTest, DuplicateIdsRejected) {
  std::vector<StatisticRequest> reqs = Mixed();
  reqs[1].id = reqs[0].id;
  EXPECT_FALSE(Repartition(reqs, variables_, kN, target_).ok());
}

void ExpectSamePlan(const RepartitionResult& a, const RepartitionResult& b) {
  ASSERT_EQ(a.requests.size(), b.requests.size());
  for (size_t i = 0; i < a.requests.size(); ++i) {
    EXPECT_EQ(a.requests[i].id, b.requests[i].id);
    EXPECT_EQ(a.requests[i].epsilon, b.requests[i].epsilon) << a.requests[i].id;
    EXPECT_EQ(a.requests[i].accuracy, b.requests[i].accuracy) << a.requests[i].id;
  }
  EXPECT_EQ(a.composed_epsilon, b.composed_epsilon);
  EXPECT_EQ(a.scale_factor, b.scale_factor);
}

TEST_F(RepartitionTest, Idempotent) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<StatisticRequest> reqs = Mixed();
    for (StatisticRequest& q : reqs) {
      if (gen() % 2) q.epsilon = u(gen);
    }
    if (trial % 3 == 0) {
      reqs[3].hold = true;
      reqs[3].epsilon = 0.05;
    }
    const RepartitionResult once = *Repartition(reqs, variables_, kN, target_);
    const RepartitionResult twice = *Repartition(once.requests, variables_, kN, target_);
    ExpectSamePlan(once, twice);
  }
}

TEST_F(RepartitionTest, OrderInvariant) {
  std::mt19937_64 gen(4);
  std::vector<StatisticRequest> reqs = Mixed();
  reqs[2].hold = true;
  reqs[2].epsilon = 0.2;
  const RepartitionResult base = *Repartition(reqs, variables_, kN, target_);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<size_t> perm(reqs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<StatisticRequest> shuffled;
    for (size_t i : perm) shuffled.push_back(reqs[i]);
    const RepartitionResult r = *Repartition(shuffled, variables_, kN, target_);
    for (size_t i = 0; i < perm.size(); ++i) {
      EXPECT_EQ(r.requests[i].epsilon, base.requests[perm[i]].epsilon);
      EXPECT_EQ(r.requests[i].accuracy, base.requests[perm[i]].accuracy);
    }
    EXPECT_EQ(r.composed_epsilon, base.composed_epsilon);
  }
}

TEST_F(RepartitionTest, DeletionTightensEveryRemainingRadius) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<StatisticRequest> reqs = Mixed();
    const RepartitionResult full = *Repartition(reqs, variables_, kN, target_);
    const size_t drop = gen() % reqs.size();
    std::vector<StatisticRequest> fewer;
    for (size_t i = 0; i < full.requests.size(); ++i) {
      if (i != drop) fewer.push_back(full.requests[i]);
    }
    const RepartitionResult after = *Repartition(fewer, variables_, kN, target_);
    for (const StatisticRequest& q : after.requests) {
      const auto before = std::find_if(full.requests.begin(), full.requests.end(),
                                       [&](const StatisticRequest& x) { return x.id == q.id; });
      EXPECT_LT(*q.accuracy, *before->accuracy) << q.id << " after dropping " << drop;
    }
  }
}

TEST_F(RepartitionTest, ConfidenceLevelWidensRadii) {
  std::vector<StatisticRequest> reqs = Mixed();
  const RepartitionResult at95 = *Repartition(reqs, variables_, kN, target_);
  for (StatisticRequest& q : reqs) q.alpha = 0.02;
  const RepartitionResult at98 = *Repartition(reqs, variables_, kN, target_);
  for (size_t i = 0; i < reqs.size(); ++i) {
    EXPECT_GT(*at98.requests[i].accuracy, *at95.requests[i].accuracy);
  }
}

TEST_F(RepartitionTest, ManyStatisticsStayWithinBudget) {
  std::vector<StatisticRequest> reqs;
  for (int i = 0; i < 60; ++i) {
    reqs.push_back(Request("s" + std::to_string(i), i % 2 ? "age" : "income",
                           i % 3 ? StatisticKind::kMean : StatisticKind::kCdf));
  }
  const absl::StatusOr<RepartitionResult> r = Repartition(reqs, variables_, kN, target_);
  DPR_ASSERT_OK(r);
  EXPECT_LE(r->composed_epsilon, target_.epsilon * (1 + 1e-9));
  EXPECT_LT(r->composed_epsilon, r->basic_total.epsilon);
}

}  // namespace
}  // namespace dpr
