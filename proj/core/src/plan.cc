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

#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

using nlohmann::json;

json ParamsJson(const PrivacyParams& p) {
  return {{"epsilon", p.epsilon}, {"delta", p.delta}};
}

absl::StatusOr<PrivacyParams> ParamsFromJson(const json& j, std::string_view what) {
  if (!j.is_object() || !j.contains("epsilon") || !j["epsilon"].is_number()) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(what), " needs a numeric epsilon"));
  }
  PrivacyParams p;
  p.epsilon = j["epsilon"].get<double>();
  if (j.contains("delta")) {
    if (!j["delta"].is_number()) {
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(what), ".delta must be a number"));
    }
    p.delta = j["delta"].get<double>();
  }
  return p;
}

}  // namespace

absl::StatusOr<PlanOutput> ComputePlan(const PlanInput& input) {
  const VetResult vet = VetGlobalParams(input.global);
  if (!vet.accepted) {
    return absl::InvalidArgumentError(
        absl::StrCat("global privacy parameters rejected: ", vet.reason));
  }
  if (input.n < 1) return absl::InvalidArgumentError("n must be >= 1");
  SampleInfo sample = input.sample;
  sample.n = input.n;
  ASSIGN_OR_RETURN(const PrivacyParams effective,
                   AmplifyBudget(input.global, sample));
  PlanOutput out;
  ASSIGN_OR_RETURN(out.budget,
                   SplitBudget(input.global, effective,
                               input.depositor_epsilon.value_or(effective.epsilon)));
  std::vector<VariableSpec> variables = input.variables;
  for (VariableSpec& v : variables) v.n = input.n;
  const VariableMap map = MakeVariableMap(variables);
  if (map.size() != variables.size()) {
    return absl::InvalidArgumentError("duplicate variable names");
  }
  ASSIGN_OR_RETURN(out.repartition, Repartition(input.requests, map, input.n,
                                                out.budget.depositor));
  out.warnings = vet.warnings;
  out.warnings.insert(out.warnings.end(), out.repartition.warnings.begin(),
                      out.repartition.warnings.end());
  return out;
}

absl::StatusOr<PlanInput> PlanInputFromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("body must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "global" && key != "sample" && key != "depositor_epsilon" &&
        key != "n" && key != "variables" && key != "requests") {
      return absl::InvalidArgumentError(absl::StrCat("unknown field '", key, "'"));
    }
  }
  PlanInput input;
  if (!j.contains("global")) return absl::InvalidArgumentError("missing 'global'");
  ASSIGN_OR_RETURN(input.global, ParamsFromJson(j["global"], "global"));
  if (!j.contains("n") || !j["n"].is_number_integer()) {
    return absl::InvalidArgumentError("'n' must be an integer");
  }
  input.n = j["n"].get<int64_t>();
  if (j.contains("sample") && !j["sample"].is_null()) {
    const json& s = j["sample"];
    if (!s.is_object()) return absl::InvalidArgumentError("'sample' must be an object");
    input.sample.secret = s.value("secret", false);
    if (input.sample.secret) {
      if (!s.contains("population") || !s["population"].is_number()) {
        return absl::InvalidArgumentError("secret sample needs a population size");
      }
      input.sample.m = s["population"].get<double>();
    }
  }
  if (j.contains("depositor_epsilon") && !j["depositor_epsilon"].is_null()) {
    if (!j["depositor_epsilon"].is_number()) {
      return absl::InvalidArgumentError("'depositor_epsilon' must be a number");
    }
    input.depositor_epsilon = j["depositor_epsilon"].get<double>();
  }
  if (!j.contains("variables") || !j["variables"].is_array()) {
    return absl::InvalidArgumentError("'variables' must be an array");
  }
  for (const json& v : j["variables"]) {
    ASSIGN_OR_RETURN(VariableSpec spec, VariableFromJson(v));
    input.variables.push_back(std::move(spec));
  }
  if (!j.contains("requests") || !j["requests"].is_array()) {
    return absl::InvalidArgumentError("'requests' must be an array");
  }
  for (const json& r : j["requests"]) {
    ASSIGN_OR_RETURN(StatisticRequest request, RequestFromJson(r));
    input.requests.push_back(std::move(request));
  }
  return input;
}

json ToJson(const PlanInput& input) {
  json variables = json::array();
  for (const VariableSpec& v : input.variables) variables.push_back(ToJson(v));
  json requests = json::array();
  for (const StatisticRequest& r : input.requests) requests.push_back(ToJson(r));
  json out = {{"global", ParamsJson(input.global)},
              {"n", input.n},
              {"variables", std::move(variables)},
              {"requests", std::move(requests)}};
  if (input.sample.secret) {
    out["sample"] = {{"secret", true}, {"population", input.sample.m}};
  }
  if (input.depositor_epsilon.has_value()) {
    out["depositor_epsilon"] = *input.depositor_epsilon;
  }
  return out;
}

json ToJson(const PlanOutput& output) {
  const RepartitionResult& r = output.repartition;
  json requests = json::array();
  for (const StatisticRequest& request : r.requests) {
    requests.push_back(ToJson(request));
  }
  return {
      {"budget",
       {{"global", ParamsJson(output.budget.global)},
        {"effective", ParamsJson(output.budget.effective)},
        {"depositor", ParamsJson(output.budget.depositor)},
        {"analyst", ParamsJson(output.budget.analyst)}}},
      {"requests", std::move(requests)},
      {"totals",
       {{"basic_epsilon", r.basic_total.epsilon},
        {"basic_delta", r.basic_total.delta},
        {"composed_epsilon", r.composed_epsilon},
        {"target_epsilon", r.target.epsilon},
        {"target_delta", r.target.delta},
        {"scale_factor", r.scale_factor}}},
      {"warnings", output.warnings},
  };
}

absl::StatusOr<ReleaseBatch> BatchFromPlanJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("plan must be an object");
  if (!j.contains("totals")) return ReleaseBatchFromJson(j);
  try {
    json batch = {{"requests", j.at("requests")},
                  {"claimed_total",
                   {{"epsilon", j.at("totals").at("composed_epsilon")},
                    {"delta", j.at("budget").at("depositor").at("delta")}}}};
    return ReleaseBatchFromJson(batch);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad plan: ", e.what()));
  }
}

}  // namespace dpr
