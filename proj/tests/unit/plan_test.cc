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

#include "dpr/plan.h"

#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpr {
namespace {

using ::testing::HasSubstr;
using nlohmann::json;

json PlanJson() {
  return json::parse(R"({
    "global": {"epsilon": 1.0, "delta": 1e-6},
    "n": 1000,
    "variables": [
      {"name": "age", "kind": "numeric", "lower": 18, "upper": 90},
      {"name": "race", "kind": "categorical", "categories": ["a", "b", "c"]}
    ],
    "requests": [
      {"id": "age_mean", "variable": "age", "statistic": "mean"},
      {"id": "race_hist", "variable": "race", "statistic": "histogram"},
      {"id": "age_cdf", "variable": "age", "statistic": "cdf", "grid_size": 16}
    ]})");
}

TEST(PlanTest, PlanSpendsTheDepositorShare) {
  const auto input = PlanInputFromJson(PlanJson());
  DPR_ASSERT_OK(input);
  const auto plan = ComputePlan(*input);
  DPR_ASSERT_OK(plan);
  EXPECT_EQ(plan->budget.depositor.epsilon, 1.0);
  const RepartitionResult& r = plan->repartition;
  ASSERT_EQ(r.requests.size(), 3u);
  for (const StatisticRequest& q : r.requests) {
    ASSERT_TRUE(q.epsilon.has_value());
    EXPECT_GT(*q.epsilon, 0);
    ASSERT_TRUE(q.accuracy.has_value());
  }
  EXPECT_LE(r.composed_epsilon, 1.0 * (1 + 1e-9));
  EXPECT_GT(r.composed_epsilon, 0.99);
  EXPECT_LE(r.composed_epsilon, r.basic_total.epsilon * (1 + 1e-12));
}

TEST(PlanTest, DepositorEpsilonLeavesTheRestToAnalysts) {
  json j = PlanJson();
  j["depositor_epsilon"] = 0.4;
  const auto plan = ComputePlan(*PlanInputFromJson(j));
  DPR_ASSERT_OK(plan);
  EXPECT_NEAR(plan->budget.depositor.epsilon, 0.4, 1e-12);
  EXPECT_NEAR(plan->budget.analyst.epsilon, 0.6, 1e-12);
  EXPECT_NEAR(plan->budget.depositor.delta, 0.4e-6, 1e-18);
  EXPECT_LE(plan->repartition.composed_epsilon, 0.4 * (1 + 1e-9));
}

TEST(PlanTest, SecretSampleAmplifiesTheBudget) {
  json j = PlanJson();
  j["sample"] = {{"secret", true}, {"population", 50000}};
  const auto plan = ComputePlan(*PlanInputFromJson(j));
  DPR_ASSERT_OK(plan);
  EXPECT_GT(plan->budget.effective.epsilon, 1.0);
  j["sample"] = {{"secret", true}};
  EXPECT_THAT(std::string(PlanInputFromJson(j).status().message()),
              HasSubstr("population"));
}

TEST(PlanTest, VettingRejectsBadGlobalParameters) {
  json j = PlanJson();
  j["global"] = {{"epsilon", 1.0}, {"delta", 0.25}};
  const auto input = PlanInputFromJson(j);
  DPR_ASSERT_OK(input);
  const auto plan = ComputePlan(*input);
  EXPECT_EQ(plan.status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(PlanTest, InfeasibleHoldsFail) {
  json j = PlanJson();
  j["requests"][0]["hold"] = true;
  j["requests"][0]["epsilon"] = 2.0;
  const auto plan = ComputePlan(*PlanInputFromJson(j));
  EXPECT_EQ(plan.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_THAT(std::string(plan.status().message()), HasSubstr("age_mean"));
}

TEST(PlanTest, InputJsonRoundTrip) {
  json j = PlanJson();
  j["depositor_epsilon"] = 0.5;
  j["sample"] = {{"secret", true}, {"population", 1e6}};
  const auto input = PlanInputFromJson(j);
  DPR_ASSERT_OK(input);
  const auto back = PlanInputFromJson(ToJson(*input));
  DPR_ASSERT_OK(back);
  EXPECT_EQ(ToJson(*back), ToJson(*input));
  j["extra"] = 1;
  EXPECT_THAT(std::string(PlanInputFromJson(j).status().message()), HasSubstr("'extra'"));
  j.erase("extra");
  j["n"] = 10.5;
  EXPECT_FALSE(PlanInputFromJson(j).ok());
}

TEST(PlanTest, PlanOutputBecomesAVerifiableBatch) {
  const auto plan = ComputePlan(*PlanInputFromJson(PlanJson()));
  DPR_ASSERT_OK(plan);
  const json out = ToJson(*plan);
  const auto batch = BatchFromPlanJson(out);
  DPR_ASSERT_OK(batch);
  ASSERT_EQ(batch->requests.size(), 3u);
  ASSERT_TRUE(batch->claimed_total.has_value());
  EXPECT_EQ(batch->claimed_total->epsilon, plan->repartition.composed_epsilon);
  EXPECT_EQ(batch->claimed_total->delta, plan->budget.depositor.delta);

  // A plain batch passes through unchanged.
  const auto plain = BatchFromPlanJson(ToJson(*batch));
  DPR_ASSERT_OK(plain);
  EXPECT_EQ(ToJson(*plain), ToJson(*batch));
  EXPECT_FALSE(BatchFromPlanJson(json::array()).ok());
  json broken = out;
  broken["budget"].erase("depositor");
  EXPECT_FALSE(BatchFromPlanJson(broken).ok());
}

TEST(PlanTest, ComputePlanIsDeterministic) {
  const auto input = PlanInputFromJson(PlanJson());
  DPR_ASSERT_OK(input);
  const auto a = ComputePlan(*input);
  const auto b = ComputePlan(*input);
  DPR_ASSERT_OK(a);
  DPR_ASSERT_OK(b);
  EXPECT_EQ(ToJson(*a).dump(), ToJson(*b).dump());
}

}  // namespace
}  // namespace dpr
