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

#ifndef DPR_RELEASE_ENGINE_H_
#define DPR_RELEASE_ENGINE_H_

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/composition.h"
#include "dpr/dataset.h"
#include "dpr/ledger_store.h"
#include "dpr/metadata.h"
#include "dpr/random.h"
#include "dpr/request.h"

namespace dpr {

// A batch as submitted by a client. Everything in it is untrusted.
struct ReleaseBatch {
  std::vector<StatisticRequest> requests;
  // Total the client says the batch costs; never used for accounting.
  std::optional<PrivacyParams> claimed_total;
};

nlohmann::json ToJson(const ReleaseBatch& batch);
absl::StatusOr<ReleaseBatch> ReleaseBatchFromJson(const nlohmann::json& json);

// Why a well-formed batch was turned down.
enum class Rejection {
  kNone,
  // The batch contradicts its own recomputation (accuracy or total).
  kVerification,
  // The pool cannot afford the batch.
  kBudget,
  // The shared pool's per-user hourly limit.
  kRateLimit,
};

struct VerifyResult {
  bool ok = false;
  Rejection rejection = Rejection::kNone;
  // Per-statistic parameters recomputed from the requests.
  std::vector<PrivacyParams> statistics;
  // What the ledger would charge for the batch.
  PrivacyParams cost;
  PrivacyParams remaining;
  std::string reason;
};

struct ExecuteResult {
  bool accepted = false;
  Rejection rejection = Rejection::kNone;
  std::string batch_id;
  PrivacyParams cost;
  PrivacyParams remaining;
  std::string reason;
  std::vector<ReleaseRecord> records;
  std::vector<std::string> warnings;
};

struct ReleaseEngineOptions {
  // Directory for public.json and user-<id>.json; empty keeps metadata in
  // memory only.
  std::string metadata_dir;
  // Fault injection: called after the deduction is durable and before any
  // mechanism runs. A non-OK status aborts Execute as if the process had
  // died there, without a refund.
  std::function<absl::Status()> after_deduct;
};

// The only component that touches raw data. Execute runs
// verify -> deduct (durable) -> mechanisms -> metadata; a mechanism failure
// refunds the deduction, a crash after the deduction does not.
class ReleaseEngine {
 public:
  static absl::StatusOr<std::unique_ptr<ReleaseEngine>> Create(
      Schema schema, std::shared_ptr<const Dataset> dataset,
      std::unique_ptr<LedgerStore> ledger, SecureRandom rng,
      ReleaseEngineOptions options = {});

  const Schema& schema() const { return schema_; }
  const Dataset& dataset() const { return *dataset_; }
  LedgerStore& ledger() { return *ledger_; }

  // Recomputes every statistic's epsilon from its request (ignoring any
  // claimed total) and asks the ledger whether the batch fits.
  absl::StatusOr<VerifyResult> VerifyRequest(Tier tier, std::string_view user,
                                             const ReleaseBatch& batch);

  absl::StatusOr<ExecuteResult> Execute(Tier tier, std::string_view user,
                                        const ReleaseBatch& batch);

  MetadataFile PublicMetadata() const;
  absl::StatusOr<MetadataFile> UserMetadata(std::string_view user) const;

 private:
  ReleaseEngine(Schema schema, std::shared_ptr<const Dataset> dataset,
                std::unique_ptr<LedgerStore> ledger, SecureRandom rng,
                ReleaseEngineOptions options);

  absl::Status LoadMetadata();
  absl::Status Publish(std::vector<ReleaseRecord> records,
                       const std::string& audience);
  absl::StatusOr<std::vector<ReleaseRecord>> Compute(
      const ReleaseBatch& batch, const std::string& audience,
      const std::string& batch_id, std::vector<std::string>& warnings);

  Schema schema_;
  // Read-only; may be shared with other engines or readers.
  std::shared_ptr<const Dataset> dataset_;
  std::unique_ptr<LedgerStore> ledger_;
  SecureRandom rng_;
  ReleaseEngineOptions options_;

  mutable std::mutex mu_;
  std::vector<ReleaseRecord> public_releases_;
  std::map<std::string, std::vector<ReleaseRecord>, std::less<>> user_releases_;
};

// User ids become file names; letters, digits, '_', '-' and '.' only.
absl::Status ValidateUserId(std::string_view user);

}  // namespace dpr

#endif  // DPR_RELEASE_ENGINE_H_
