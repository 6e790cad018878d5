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

#include "dpr/service.h"

#include <fstream>
#include <utility>
#include <vector>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "dpr/metadata.h"
#include "dpr/plan.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

using nlohmann::json;

HttpResponse Error(int status, std::string_view code, const std::string& message) {
  return {status,
          {{"error", {{"code", std::string(code)}, {"message", message}}}}};
}

json ParamsJson(const PrivacyParams& p) {
  return {{"epsilon", p.epsilon}, {"delta", p.delta}};
}

// Maps a library error to a response. `Internal` and friends are reported
// without their message.
HttpResponse FromStatus(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return Error(422, "invalid_request", std::string(status.message()));
    case absl::StatusCode::kFailedPrecondition:
      return Error(422, "infeasible", std::string(status.message()));
    case absl::StatusCode::kNotFound:
      return Error(404, "not_found", std::string(status.message()));
    case absl::StatusCode::kPermissionDenied:
      return Error(403, "tier_violation", std::string(status.message()));
    default:
      return Error(500, "internal", "internal error");
  }
}

std::optional<json> ParseBody(std::string_view body) {
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

absl::StatusOr<bool> ParseBool(std::string_view name, const char* value) {
  bool out;
  if (!absl::SimpleAtob(value, &out)) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(name), " must be a boolean, got '", value, "'"));
  }
  return out;
}

}  // namespace

bool Principal::MayUse(std::string_view dataset) const {
  return datasets.empty() || datasets.count(std::string(dataset)) > 0;
}

StaticTokenAuthenticator::StaticTokenAuthenticator(
    std::map<std::string, Principal> tokens)
    : tokens_(tokens.begin(), tokens.end()) {}

absl::StatusOr<std::unique_ptr<StaticTokenAuthenticator>>
StaticTokenAuthenticator::FromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("token table must be an object");
  std::map<std::string, Principal> tokens;
  for (const auto& [token, entry] : j.items()) {
    if (token.empty()) return absl::InvalidArgumentError("empty token");
    if (!entry.is_object() || !entry.contains("tier") || !entry["tier"].is_string()) {
      return absl::InvalidArgumentError("every token needs a tier");
    }
    Principal p;
    ASSIGN_OR_RETURN(p.tier, ParseTier(entry["tier"].get<std::string>()));
    if (entry.contains("user")) {
      if (!entry["user"].is_string()) return absl::InvalidArgumentError("user must be a string");
      p.user = entry["user"].get<std::string>();
    }
    if (p.tier != Tier::kDepositor) {
      RETURN_IF_ERROR(ValidateUserId(p.user));
    }
    if (entry.contains("datasets")) {
      if (!entry["datasets"].is_array()) {
        return absl::InvalidArgumentError("datasets must be an array");
      }
      for (const json& d : entry["datasets"]) {
        if (!d.is_string()) return absl::InvalidArgumentError("dataset ids are strings");
        p.datasets.insert(d.get<std::string>());
      }
    }
    tokens.emplace(token, std::move(p));
  }
  return std::make_unique<StaticTokenAuthenticator>(std::move(tokens));
}

std::optional<Principal> StaticTokenAuthenticator::Authenticate(
    std::string_view token) const {
  const auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

absl::StatusOr<ServiceConfig> LoadServiceConfig(
    const std::string& path,
    const std::function<const char*(const char*)>& getenv) {
  ServiceConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      return absl::InvalidArgumentError(absl::StrCat(path, " is not a JSON object"));
    }
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "listen_address") {
          config.listen_address = value.get<std::string>();
        } else if (key == "port") {
          config.port = value.get<int>();
        } else if (key == "data_dir") {
          config.data_dir = value.get<std::string>();
        } else if (key == "tokens_file") {
          config.tokens_file = value.get<std::string>();
        } else if (key == "semi_trusted") {
          config.dataset_options.semi_trusted_enabled = value.get<bool>();
        } else if (key == "shared_pool") {
          config.dataset_options.shared_pool_enabled = value.get<bool>();
        } else if (key == "shared_hourly_epsilon") {
          config.dataset_options.shared_hourly_epsilon_cap = value.get<double>();
        } else if (key == "analyst_statistic_capacity") {
          config.dataset_options.analyst_statistic_capacity = value.get<int64_t>();
        } else {
          return absl::InvalidArgumentError(
              absl::StrCat(path, ": unknown field '", key, "'"));
        }
      }
    } catch (const json::exception& e) {
      return absl::InvalidArgumentError(absl::StrCat(path, ": ", e.what()));
    }
  }
  if (const char* v = getenv("DPR_LISTEN_ADDRESS")) config.listen_address = v;
  if (const char* v = getenv("DPR_PORT")) {
    if (!absl::SimpleAtoi(v, &config.port)) {
      return absl::InvalidArgumentError(absl::StrCat("DPR_PORT must be an integer, got '", v, "'"));
    }
  }
  if (const char* v = getenv("DPR_DATA_DIR")) config.data_dir = v;
  if (const char* v = getenv("DPR_TOKENS_FILE")) config.tokens_file = v;
  if (const char* v = getenv("DPR_SEMI_TRUSTED")) {
    ASSIGN_OR_RETURN(config.dataset_options.semi_trusted_enabled,
                     ParseBool("DPR_SEMI_TRUSTED", v));
  }
  if (const char* v = getenv("DPR_SHARED_POOL")) {
    ASSIGN_OR_RETURN(config.dataset_options.shared_pool_enabled,
                     ParseBool("DPR_SHARED_POOL", v));
  }
  if (const char* v = getenv("DPR_SHARED_HOURLY_EPSILON")) {
    if (!absl::SimpleAtod(v, &config.dataset_options.shared_hourly_epsilon_cap)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "DPR_SHARED_HOURLY_EPSILON must be a number, got '", v, "'"));
    }
  }
  if (config.port < 0 || config.port > 65535) {
    return absl::InvalidArgumentError("port out of range");
  }
  if (config.dataset_options.shared_hourly_epsilon_cap < 0) {
    return absl::InvalidArgumentError("shared_hourly_epsilon must be >= 0");
  }
  return config;
}

std::optional<std::string_view> BearerToken(std::string_view header) {
  constexpr std::string_view kPrefix = "Bearer ";
  if (header.size() <= kPrefix.size() || header.substr(0, kPrefix.size()) != kPrefix) {
    return std::nullopt;
  }
  return header.substr(kPrefix.size());
}

Service::Service(ServiceConfig config, std::shared_ptr<const Authenticator> auth)
    : config_(std::move(config)), auth_(std::move(auth)) {}

HttpResponse Service::Repartition(std::string_view body) {
  const std::optional<json> j = ParseBody(body);
  if (!j.has_value()) return Error(400, "bad_json", "body must be a JSON object");
  absl::StatusOr<PlanInput> input = PlanInputFromJson(*j);
  if (!input.ok()) return Error(422, "invalid_request", std::string(input.status().message()));
  const VetResult vet = VetGlobalParams(input->global);
  if (!vet.accepted) {
    HttpResponse out = Error(422, "invalid_params", vet.reason);
    out.body["error"]["check"] = "vet_global_params";
    out.body["error"]["field"] = "global";
    return out;
  }
  absl::StatusOr<PlanOutput> plan = ComputePlan(*input);
  if (!plan.ok()) return FromStatus(plan.status());
  return {200, ToJson(*plan)};
}

absl::StatusOr<ReleaseEngine*> Service::Engine(const std::string& dataset) {
  std::lock_guard lock(mu_);
  const auto it = engines_.find(dataset);
  if (it != engines_.end()) return it->second.get();
  absl::StatusOr<std::unique_ptr<ReleaseEngine>> engine =
      OpenDataset(config_.data_dir, dataset, config_.dataset_options);
  if (!engine.ok()) {
    if (absl::IsInvalidArgument(engine.status()) || absl::IsNotFound(engine.status())) {
      return absl::NotFoundError(absl::StrCat("unknown dataset '", dataset, "'"));
    }
    return engine.status();
  }
  ReleaseEngine* raw = engine->get();
  engines_.emplace(dataset, *std::move(engine));
  return raw;
}

HttpResponse Service::Release(std::optional<std::string_view> bearer,
                              std::string_view body) {
  if (!bearer.has_value() || auth_ == nullptr) {
    return Error(401, "unauthenticated", "a bearer token is required");
  }
  const std::optional<Principal> principal = auth_->Authenticate(*bearer);
  if (!principal.has_value()) return Error(401, "unauthenticated", "unknown token");

  std::optional<json> j = ParseBody(body);
  if (!j.has_value()) return Error(400, "bad_json", "body must be a JSON object");
  if (!j->contains("dataset") || !(*j)["dataset"].is_string()) {
    return Error(422, "invalid_request", "missing 'dataset'");
  }
  const std::string dataset = (*j)["dataset"].get<std::string>();
  j->erase("dataset");
  if (!principal->MayUse(dataset)) {
    return Error(403, "forbidden", "token is not valid for this dataset");
  }
  absl::StatusOr<ReleaseBatch> batch = ReleaseBatchFromJson(*j);
  if (!batch.ok()) return Error(422, "invalid_request", std::string(batch.status().message()));
  absl::StatusOr<ReleaseEngine*> engine = Engine(dataset);
  if (!engine.ok()) {
    if (absl::IsNotFound(engine.status())) {
      return Error(404, "unknown_dataset", std::string(engine.status().message()));
    }
    return FromStatus(engine.status());
  }

  absl::StatusOr<ExecuteResult> result =
      (*engine)->Execute(principal->tier, principal->user, *batch);
  if (!result.ok()) {
    if (absl::IsNotFound(result.status())) {
      return Error(422, "invalid_request", std::string(result.status().message()));
    }
    return FromStatus(result.status());
  }
  if (!result->accepted) {
    HttpResponse out;
    switch (result->rejection) {
      case Rejection::kBudget:
        out = Error(409, "budget_exhausted", result->reason);
        break;
      case Rejection::kRateLimit:
        out = Error(429, "rate_limited", result->reason);
        break;
      default:
        out = Error(422, "verification_failed", result->reason);
        break;
    }
    out.body["remaining"] = ParamsJson(result->remaining);
    out.body["cost"] = ParamsJson(result->cost);
    return out;
  }
  json releases = json::array();
  for (const ReleaseRecord& r : result->records) releases.push_back(ToJson(r));
  json out = {{"dataset", dataset},
              {"batch_id", result->batch_id},
              {"tier", std::string(TierName(principal->tier))},
              {"cost", ParamsJson(result->cost)},
              {"remaining", ParamsJson(result->remaining)},
              {"releases", std::move(releases)},
              {"warnings", result->warnings}};
  return {200, std::move(out)};
}

HttpResponse Service::PublicMetadata(std::string_view dataset) {
  absl::StatusOr<ReleaseEngine*> engine = Engine(std::string(dataset));
  if (!engine.ok()) {
    if (absl::IsNotFound(engine.status())) {
      return Error(404, "unknown_dataset", std::string(engine.status().message()));
    }
    return FromStatus(engine.status());
  }
  absl::StatusOr<json> file = ToJson((*engine)->PublicMetadata());
  if (!file.ok()) return FromStatus(file.status());
  return {200, *std::move(file)};
}

HttpResponse Service::UserMetadata(std::optional<std::string_view> bearer,
                                   std::string_view dataset,
                                   std::optional<std::string_view> user) {
  if (!bearer.has_value() || auth_ == nullptr) {
    return Error(401, "unauthenticated", "a bearer token is required");
  }
  const std::optional<Principal> principal = auth_->Authenticate(*bearer);
  if (!principal.has_value()) return Error(401, "unauthenticated", "unknown token");
  if (!principal->MayUse(dataset)) {
    return Error(403, "forbidden", "token is not valid for this dataset");
  }
  const std::string target = std::string(user.value_or(principal->user));
  switch (principal->tier) {
    case Tier::kDepositor:
      break;
    case Tier::kSemiTrusted:
      if (target != principal->user) {
        return Error(403, "wrong_user", "user metadata is only visible to its owner");
      }
      break;
    case Tier::kUntrusted:
      return Error(403, "tier_violation", "untrusted users may only read public metadata");
  }
  if (target.empty()) return Error(422, "invalid_request", "missing 'user'");
  absl::StatusOr<ReleaseEngine*> engine = Engine(std::string(dataset));
  if (!engine.ok()) {
    if (absl::IsNotFound(engine.status())) {
      return Error(404, "unknown_dataset", std::string(engine.status().message()));
    }
    return FromStatus(engine.status());
  }
  absl::StatusOr<MetadataFile> file = (*engine)->UserMetadata(target);
  if (!file.ok()) return FromStatus(file.status());
  absl::StatusOr<json> out = ToJson(*file);
  if (!out.ok()) return FromStatus(out.status());
  return {200, *std::move(out)};
}

}  // namespace dpr
