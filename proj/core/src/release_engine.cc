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

#include "dpr/release_engine.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "dpr/accuracy.h"
#include "dpr/mechanisms.h"
#include "dpr/status_macros.h"
#include "dpr/transform.h"

namespace dpr {
namespace {

namespace fs = std::filesystem;

// Claimed accuracies may differ from the recomputed ones by rounding only.
constexpr double kAccuracyRelativeTolerance = 1e-6;

std::string UserFileName(std::string_view user) {
  return absl::StrCat("user-", std::string(user), ".json");
}

absl::StatusOr<ReleaseValue> RunMechanism(const StatisticRequest& r,
                                          const Column& column, double epsilon,
                                          SecureRandom& rng) {
  switch (r.kind) {
    case StatisticKind::kMean:
      return r.snapping ? DpMeanSnapping(column, epsilon, rng, r.alpha)
                        : DpMean(column, epsilon, rng, r.alpha);
    case StatisticKind::kHistogram: {
      HistogramBins bins;
      if (column.spec.kind == VariableKind::kNumeric) {
        bins = r.bin_edges.empty()
                   ? HistogramBins::Uniform(column.spec.lower, column.spec.upper,
                                            static_cast<int>(r.bins))
                   : HistogramBins{r.bin_edges};
      }
      return DpHistogram(column, epsilon, bins, rng, r.alpha);
    }
    case StatisticKind::kCdf:
      return DpCdf(column, epsilon, r.grid_size, rng, r.alpha);
    case StatisticKind::kQuantile:
      return DpQuantile(column, epsilon, r.quantile, rng, r.candidates, r.alpha);
  }
  return absl::InternalError("unknown statistic kind");
}

}  // namespace

absl::Status ValidateUserId(std::string_view user) {
  if (user.empty() || user.size() > 128 || user == kPublicAudience) {
    return absl::InvalidArgumentError("invalid user id");
  }
  for (const char c : user) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.')) {
      return absl::InvalidArgumentError(
          absl::StrCat("invalid character in user id '", std::string(user), "'"));
    }
  }
  if (user.front() == '.') return absl::InvalidArgumentError("invalid user id");
  return absl::OkStatus();
}

nlohmann::json ToJson(const ReleaseBatch& batch) {
  nlohmann::json requests = nlohmann::json::array();
  for (const StatisticRequest& r : batch.requests) requests.push_back(ToJson(r));
  nlohmann::json out = {{"requests", std::move(requests)}};
  if (batch.claimed_total.has_value()) {
    out["claimed_total"] = {{"epsilon", batch.claimed_total->epsilon},
                            {"delta", batch.claimed_total->delta}};
  }
  return out;
}

absl::StatusOr<ReleaseBatch> ReleaseBatchFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("requests") || !j["requests"].is_array()) {
    return absl::InvalidArgumentError("batch needs a 'requests' array");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "requests" && key != "claimed_total") {
      return absl::InvalidArgumentError(
          absl::StrCat("batch: unknown field '", key, "'"));
    }
  }
  ReleaseBatch batch;
  for (const auto& r : j["requests"]) {
    ASSIGN_OR_RETURN(StatisticRequest request, RequestFromJson(r));
    batch.requests.push_back(std::move(request));
  }
  if (j.contains("claimed_total")) {
    const auto& c = j["claimed_total"];
    if (!c.is_object() || !c.contains("epsilon") || !c["epsilon"].is_number()) {
      return absl::InvalidArgumentError("claimed_total needs an epsilon");
    }
    PrivacyParams claimed;
    claimed.epsilon = c["epsilon"].get<double>();
    if (c.contains("delta") && c["delta"].is_number()) {
      claimed.delta = c["delta"].get<double>();
    }
    batch.claimed_total = claimed;
  }
  return batch;
}

ReleaseEngine::ReleaseEngine(Schema schema,
                             std::shared_ptr<const Dataset> dataset,
                             std::unique_ptr<LedgerStore> ledger,
                             SecureRandom rng, ReleaseEngineOptions options)
    : schema_(std::move(schema)),
      dataset_(std::move(dataset)),
      ledger_(std::move(ledger)),
      rng_(std::move(rng)),
      options_(std::move(options)) {}

absl::StatusOr<std::unique_ptr<ReleaseEngine>> ReleaseEngine::Create(
    Schema schema, std::shared_ptr<const Dataset> dataset,
    std::unique_ptr<LedgerStore> ledger, SecureRandom rng,
    ReleaseEngineOptions options) {
  RETURN_IF_ERROR(schema.Validate());
  if (dataset == nullptr) return absl::InvalidArgumentError("no dataset");
  if (ledger == nullptr) return absl::InvalidArgumentError("no ledger");
  if (schema.dataset_id != dataset->id()) {
    return absl::InvalidArgumentError("schema and dataset ids differ");
  }
  std::unique_ptr<ReleaseEngine> engine(
      new ReleaseEngine(std::move(schema), std::move(dataset), std::move(ledger),
                        std::move(rng), std::move(options)));
  RETURN_IF_ERROR(engine->LoadMetadata());
  return engine;
}

absl::Status ReleaseEngine::LoadMetadata() {
  const std::string& dir = options_.metadata_dir;
  if (dir.empty()) return absl::OkStatus();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const bool is_public = name == "public.json";
    const bool is_user = absl::StartsWith(name, "user-") && absl::EndsWith(name, ".json");
    if (!is_public && !is_user) continue;
    ASSIGN_OR_RETURN(MetadataFile file, ReadMetadataFile(entry.path().string()));
    if (file.dataset_id != schema_.dataset_id) {
      return absl::FailedPreconditionError(absl::StrCat(
          entry.path().string(), " belongs to dataset '", file.dataset_id, "'"));
    }
    for (ReleaseRecord& r : file.releases) {
      if (is_public && r.audience == kPublicAudience) {
        public_releases_.push_back(std::move(r));
      } else if (is_user && r.audience == file.audience) {
        user_releases_[file.audience].push_back(std::move(r));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<VerifyResult> ReleaseEngine::VerifyRequest(
    Tier tier, std::string_view user, const ReleaseBatch& batch) {
  VerifyResult out;
  std::set<std::string> ids;
  for (const StatisticRequest& r : batch.requests) {
    if (!ids.insert(r.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate request id '", r.id, "'"));
    }
    ASSIGN_OR_RETURN(const AccuracyContext context,
                     AccuracyContextFor(r, dataset_->variables(), dataset_->n()));
    if (r.transform.has_value()) {
      const absl::StatusOr<ExprPtr> program =
          ParseProgram(r.transform->program, dataset_->variables());
      if (!program.ok()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "request '", r.id, "': ", program.status().message()));
      }
    }
    double epsilon;
    if (r.epsilon.has_value()) {
      epsilon = *r.epsilon;
    } else if (r.accuracy.has_value()) {
      ASSIGN_OR_RETURN(epsilon,
                       AccuracyToEpsilon(r.kind, *r.accuracy, r.alpha, context));
    } else {
      return absl::InvalidArgumentError(absl::StrCat(
          "request '", r.id, "' has neither epsilon nor accuracy"));
    }
    if (r.accuracy.has_value()) {
      ASSIGN_OR_RETURN(const double actual,
                       EpsilonToAccuracy(r.kind, epsilon, r.alpha, context));
      if (*r.accuracy < actual * (1 - kAccuracyRelativeTolerance)) {
        out.reason = absl::StrCat("request '", r.id, "' claims accuracy ",
                                  *r.accuracy, " but epsilon ", epsilon,
                                  " only gives ", actual);
        out.rejection = Rejection::kVerification;
        return out;
      }
    }
    out.statistics.push_back({epsilon, r.delta});
  }
  ASSIGN_OR_RETURN(const DeductResult preview,
                   ledger_->Preview(tier, user, out.statistics));
  out.cost = preview.cost;
  out.remaining = preview.remaining;
  if (!preview.accepted) {
    out.reason = preview.reason;
    out.rejection =
        preview.rate_limited ? Rejection::kRateLimit : Rejection::kBudget;
    return out;
  }
  if (batch.claimed_total.has_value()) {
    // Epsilon against the composed cost; delta against what the requests
    // ask for, since the ledger's delta share is not the client's to know.
    const PrivacyParams& claimed = *batch.claimed_total;
    const double requested_delta = BasicCompose(out.statistics).delta;
    if (claimed.epsilon < out.cost.epsilon * (1 - kBudgetRelativeTolerance) ||
        claimed.delta < requested_delta * (1 - kBudgetRelativeTolerance)) {
      out.reason = absl::StrCat(
          "batch claims a total of (epsilon ", claimed.epsilon, ", delta ",
          claimed.delta, ") but recomputation gives (epsilon ",
          out.cost.epsilon, ", delta ", requested_delta, ")");
      out.rejection = Rejection::kVerification;
      return out;
    }
  }
  out.ok = true;
  return out;
}

absl::StatusOr<std::vector<ReleaseRecord>> ReleaseEngine::Compute(
    const ReleaseBatch& batch, const std::string& audience,
    const std::string& batch_id, std::vector<std::string>& warnings) {
  // Epsilons were checked by VerifyRequest; recompute them the same way.
  std::vector<ReleaseRecord> records;
  const std::string timestamp = NowIso8601();
  for (const StatisticRequest& r : batch.requests) {
    ASSIGN_OR_RETURN(const AccuracyContext context,
                     AccuracyContextFor(r, dataset_->variables(), dataset_->n()));
    double epsilon;
    if (r.epsilon.has_value()) {
      epsilon = *r.epsilon;
    } else {
      ASSIGN_OR_RETURN(epsilon,
                       AccuracyToEpsilon(r.kind, *r.accuracy, r.alpha, context));
    }
    std::optional<TransformResult> derived;
    const Column* column = nullptr;
    if (r.transform.has_value()) {
      ASSIGN_OR_RETURN(derived, ApplyTransform(*r.transform, *dataset_, r.Target()));
      for (const std::string& w : derived->warnings) {
        warnings.push_back(absl::StrCat("request '", r.id, "': ", w));
      }
      column = &derived->column;
    } else {
      column = dataset_->Find(r.variable);
      if (column == nullptr) {
        return absl::NotFoundError(absl::StrCat("no column '", r.variable, "'"));
      }
    }
    ASSIGN_OR_RETURN(ReleaseValue value, RunMechanism(r, *column, epsilon, rng_));
    ReleaseRecord record(std::move(value));
    record.request_id = r.id;
    record.variable = r.Target();
    record.transform = r.transform;
    record.quantile = r.kind == StatisticKind::kQuantile ? r.quantile : 0;
    record.alpha = r.alpha;
    record.batch_id = batch_id;
    record.timestamp = timestamp;
    record.audience = audience;
    records.push_back(std::move(record));
  }
  return records;
}

absl::StatusOr<ExecuteResult> ReleaseEngine::Execute(
    Tier tier, std::string_view user, const ReleaseBatch& batch) {
  if (tier == Tier::kSemiTrusted) RETURN_IF_ERROR(ValidateUserId(user));
  ExecuteResult out;
  ASSIGN_OR_RETURN(const VerifyResult verified, VerifyRequest(tier, user, batch));
  out.cost = verified.cost;
  out.remaining = verified.remaining;
  if (!verified.ok) {
    out.reason = verified.reason;
    out.rejection = verified.rejection;
    return out;
  }
  if (batch.requests.empty()) {
    out.accepted = true;
    return out;
  }
  ASSIGN_OR_RETURN(const DeductResult deducted,
                   ledger_->Deduct(tier, user, verified.statistics));
  out.cost = deducted.cost;
  out.remaining = deducted.remaining;
  if (!deducted.accepted) {
    out.reason = deducted.reason;
    out.rejection =
        deducted.rate_limited ? Rejection::kRateLimit : Rejection::kBudget;
    return out;
  }
  out.batch_id = deducted.batch_id;
  if (options_.after_deduct) RETURN_IF_ERROR(options_.after_deduct());

  const std::string audience =
      tier == Tier::kSemiTrusted ? std::string(user) : std::string(kPublicAudience);
  absl::StatusOr<std::vector<ReleaseRecord>> records =
      Compute(batch, audience, deducted.batch_id, out.warnings);
  if (!records.ok()) {
    ASSIGN_OR_RETURN(const std::string pool, ledger_->PoolFor(tier, user));
    const absl::Status refund = ledger_->Refund(pool, deducted.batch_id);
    if (!refund.ok()) {
      return absl::InternalError(absl::StrCat(
          records.status().message(), "; refund failed: ", refund.message()));
    }
    return records.status();
  }
  RETURN_IF_ERROR(Publish(*records, audience));
  out.records = *std::move(records);
  out.accepted = true;
  return out;
}

absl::Status ReleaseEngine::Publish(std::vector<ReleaseRecord> records,
                                    const std::string& audience) {
  std::lock_guard lock(mu_);
  const bool is_public = audience == kPublicAudience;
  auto& target = is_public ? public_releases_ : user_releases_[audience];
  for (ReleaseRecord& r : records) target.push_back(std::move(r));
  if (options_.metadata_dir.empty()) return absl::OkStatus();

  ASSIGN_OR_RETURN(const MetadataFile public_file,
                   BuildPublicMetadata(schema_, dataset_->n(), public_releases_));
  const fs::path dir(options_.metadata_dir);
  if (is_public) {
    RETURN_IF_ERROR(WriteMetadataFile((dir / "public.json").string(), public_file));
  }
  for (const auto& [user, releases] : user_releases_) {
    if (!is_public && user != audience) continue;
    ASSIGN_OR_RETURN(const MetadataFile file,
                     BuildUserMetadata(public_file, user, releases));
    RETURN_IF_ERROR(WriteMetadataFile((dir / UserFileName(user)).string(), file));
  }
  return absl::OkStatus();
}

MetadataFile ReleaseEngine::PublicMetadata() const {
  std::lock_guard lock(mu_);
  absl::StatusOr<MetadataFile> file =
      BuildPublicMetadata(schema_, dataset_->n(), public_releases_);
  // The schema was validated at construction and records are public.
  return *std::move(file);
}

absl::StatusOr<MetadataFile> ReleaseEngine::UserMetadata(
    std::string_view user) const {
  RETURN_IF_ERROR(ValidateUserId(user));
  const MetadataFile public_file = PublicMetadata();
  std::lock_guard lock(mu_);
  const auto it = user_releases_.find(user);
  if (it == user_releases_.end()) {
    return BuildUserMetadata(public_file, user, {});
  }
  return BuildUserMetadata(public_file, user, it->second);
}

}  // namespace dpr
