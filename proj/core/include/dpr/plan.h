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

#ifndef DPR_PLAN_H_
#define DPR_PLAN_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/budgeter.h"
#include "dpr/release_engine.h"
#include "dpr/request.h"
#include "nlohmann/json.hpp"

namespace dpr {

// Everything a budgeting round depends on. Self-contained: planning reads
// no server or ledger state.
struct PlanInput {
  PrivacyParams global;
  SampleInfo sample;
  // Defaults to the whole effective epsilon.
  std::optional<double> depositor_epsilon;
  int64_t n = 0;
  std::vector<VariableSpec> variables;
  std::vector<StatisticRequest> requests;
};

struct PlanOutput {
  GlobalBudget budget;
  RepartitionResult repartition;
  std::vector<std::string> warnings;
};

// vet -> secrecy-of-the-sample amplification -> depositor/analyst split ->
// repartition over the depositor share. Rejected global parameters give
// kInvalidArgument with the vetting explanation; infeasible holds give
// kFailedPrecondition.
absl::StatusOr<PlanOutput> ComputePlan(const PlanInput& input);

absl::StatusOr<PlanInput> PlanInputFromJson(const nlohmann::json& json);
nlohmann::json ToJson(const PlanInput& input);
nlohmann::json ToJson(const PlanOutput& output);

// Accepts either a batch ({"requests", "claimed_total"}) or the JSON of a
// PlanOutput, whose requests become the batch and whose composed epsilon
// and depositor delta become the claimed total.
absl::StatusOr<ReleaseBatch> BatchFromPlanJson(const nlohmann::json& json);

}  // namespace dpr

#endif  // DPR_PLAN_H_
