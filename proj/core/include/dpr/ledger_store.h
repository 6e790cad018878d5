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

#ifndef DPR_LEDGER_STORE_H_
#define DPR_LEDGER_STORE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/budgeter.h"
#include "dpr/composition.h"

namespace dpr {

enum class Tier { kDepositor, kSemiTrusted, kUntrusted };

std::string_view TierName(Tier tier);
absl::StatusOr<Tier> ParseTier(std::string_view name);

// One line of the ledger file.
struct LedgerRecord {
  int64_t sequence = 0;
  std::string user;
  std::string pool;
  std::string batch_id;
  std::vector<PrivacyParams> statistics;
  PrivacyParams cost;
  int64_t timestamp_ms = 0;
  // Returns the budget of an earlier record with the same pool and batch id.
  bool refund = false;
};

struct LedgerConfig {
  GlobalBudget budget;
  // Delta apportionment denominators (see BatchLedger). The depositor pool
  // defaults to handing its whole delta to the first batch.
  int64_t depositor_statistic_capacity = 1;
  int64_t analyst_statistic_capacity = 100;
  bool semi_trusted_enabled = true;
  bool shared_pool_enabled = true;
  // Per-user epsilon allowed on the shared pool per rolling hour; 0 turns
  // the limit off.
  double shared_hourly_epsilon_cap = 0;
  // Milliseconds since the epoch; injectable for tests.
  std::function<int64_t()> clock;
};

struct DeductResult {
  bool accepted = false;
  // Set when the batch fit the pool but broke the shared hourly limit.
  bool rate_limited = false;
  std::string batch_id;
  PrivacyParams cost;
  PrivacyParams remaining;
  std::string reason;
};

// Durable per-dataset budget ledger.
//
// Pools: "depositor", "user:<id>" for each semi-trusted analyst (each gets
// the analyst share) and "shared" for untrusted users. Every accepted batch
// is appended to a newline-delimited JSON file and fsync'ed before Deduct
// returns; opening the file replays it. A torn final line (a crash
// mid-write) is ignored, since its Deduct never returned.
//
// All mutations are serialized on one mutex, which is the single commit
// point for the dataset.
class LedgerStore {
 public:
  // An empty path keeps the ledger in memory.
  static absl::StatusOr<std::unique_ptr<LedgerStore>> Open(std::string path,
                                                           LedgerConfig config);

  LedgerStore(const LedgerStore&) = delete;
  LedgerStore& operator=(const LedgerStore&) = delete;

  const LedgerConfig& config() const { return config_; }

  // Pool a user of the given tier spends from.
  absl::StatusOr<std::string> PoolFor(Tier tier, std::string_view user) const;

  // What Deduct would decide, without committing.
  absl::StatusOr<DeductResult> Preview(Tier tier, std::string_view user,
                                       std::span<const PrivacyParams> batch);

  // Runs the privacy filter on the user's pool and, on accept, commits the
  // batch durably. Rejections leave the ledger untouched.
  absl::StatusOr<DeductResult> Deduct(Tier tier, std::string_view user,
                                      std::span<const PrivacyParams> batch);

  // Gives back an accepted batch whose release never happened.
  absl::Status Refund(std::string_view pool, std::string_view batch_id);

  absl::StatusOr<PrivacyParams> Remaining(Tier tier, std::string_view user);

  // Budget a batch of `k` statistics can be planned against: the pool's
  // remaining epsilon and the delta share the filter would grant.
  absl::StatusOr<PrivacyParams> PlanningBudget(Tier tier,
                                               std::string_view user,
                                               int64_t k);

  std::vector<LedgerRecord> Records() const;

 private:
  LedgerStore(std::string path, LedgerConfig config);

  absl::Status Replay();
  absl::Status Append(const LedgerRecord& record);
  BatchLedger& LedgerFor(const std::string& pool);
  absl::StatusOr<DeductResult> Decide(Tier tier, std::string_view user,
                                      std::span<const PrivacyParams> batch,
                                      bool commit);
  int64_t Now() const;

  std::string path_;
  LedgerConfig config_;
  mutable std::mutex mu_;
  std::map<std::string, BatchLedger, std::less<>> pools_;
  std::vector<LedgerRecord> records_;
  int64_t next_sequence_ = 1;
};

nlohmann::json ToJson(const LedgerRecord& record);
absl::StatusOr<LedgerRecord> LedgerRecordFromJson(const nlohmann::json& json);

}  // namespace dpr

#endif  // DPR_LEDGER_STORE_H_
