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

#include "dpr/ledger_store.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

constexpr std::string_view kDepositorPool = "depositor";
constexpr std::string_view kSharedPool = "shared";
constexpr int64_t kHourMs = 3600 * 1000;

absl::Status ErrnoError(std::string_view what, const std::string& path) {
  return absl::InternalError(
      absl::StrCat(std::string(what), " ", path, ": ", std::strerror(errno)));
}

absl::Status WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t written = ::write(fd, data.data(), data.size());
    if (written < 0) {
      if (errno == EINTR) continue;
      return absl::InternalError(
          absl::StrCat("ledger write failed: ", std::strerror(errno)));
    }
    data.remove_prefix(static_cast<size_t>(written));
  }
  return absl::OkStatus();
}

}  // namespace

std::string_view TierName(Tier tier) {
  switch (tier) {
    case Tier::kDepositor:
      return "depositor";
    case Tier::kSemiTrusted:
      return "semi_trusted";
    case Tier::kUntrusted:
      return "untrusted";
  }
  return "unknown";
}

absl::StatusOr<Tier> ParseTier(std::string_view name) {
  if (name == "depositor") return Tier::kDepositor;
  if (name == "semi_trusted") return Tier::kSemiTrusted;
  if (name == "untrusted") return Tier::kUntrusted;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown tier '", std::string(name), "'"));
}

nlohmann::json ToJson(const LedgerRecord& r) {
  nlohmann::json stats = nlohmann::json::array();
  for (const PrivacyParams& p : r.statistics) {
    stats.push_back({p.epsilon, p.delta});
  }
  return {{"seq", r.sequence},
          {"user", r.user},
          {"pool", r.pool},
          {"batch_id", r.batch_id},
          {"epsilon", r.cost.epsilon},
          {"delta", r.cost.delta},
          {"statistics", std::move(stats)},
          {"timestamp_ms", r.timestamp_ms},
          {"refund", r.refund}};
}

absl::StatusOr<LedgerRecord> LedgerRecordFromJson(const nlohmann::json& j) {
  LedgerRecord r;
  try {
    r.sequence = j.at("seq").get<int64_t>();
    r.user = j.at("user").get<std::string>();
    r.pool = j.at("pool").get<std::string>();
    r.batch_id = j.at("batch_id").get<std::string>();
    r.cost.epsilon = j.at("epsilon").get<double>();
    r.cost.delta = j.at("delta").get<double>();
    for (const auto& s : j.at("statistics")) {
      r.statistics.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    }
    r.timestamp_ms = j.at("timestamp_ms").get<int64_t>();
    r.refund = j.at("refund").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("bad ledger record: ", e.what()));
  }
  return r;
}

LedgerStore::LedgerStore(std::string path, LedgerConfig config)
    : path_(std::move(path)), config_(std::move(config)) {}

absl::StatusOr<std::unique_ptr<LedgerStore>> LedgerStore::Open(
    std::string path, LedgerConfig config) {
  RETURN_IF_ERROR(config.budget.depositor.Validate());
  RETURN_IF_ERROR(config.budget.analyst.Validate());
  if (config.shared_hourly_epsilon_cap < 0) {
    return absl::InvalidArgumentError("hourly cap must be >= 0");
  }
  std::unique_ptr<LedgerStore> store(
      new LedgerStore(std::move(path), std::move(config)));
  RETURN_IF_ERROR(store->Replay());
  return store;
}

int64_t LedgerStore::Now() const {
  if (config_.clock) return config_.clock();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

BatchLedger& LedgerStore::LedgerFor(const std::string& pool) {
  auto it = pools_.find(pool);
  if (it != pools_.end()) return it->second;
  BatchLedger ledger =
      pool == kDepositorPool
          ? BatchLedger(config_.budget.depositor,
                        config_.depositor_statistic_capacity)
          : BatchLedger(config_.budget.analyst,
                        config_.analyst_statistic_capacity);
  return pools_.emplace(pool, std::move(ledger)).first->second;
}

absl::Status LedgerStore::Replay() {
  if (path_.empty()) return absl::OkStatus();
  std::ifstream in(path_, std::ios::binary);
  if (!in) return absl::OkStatus();  // Fresh ledger.
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  size_t start = 0;
  int64_t line_number = 0;
  while (start < content.size()) {
    const size_t end = content.find('\n', start);
    ++line_number;
    if (end == std::string::npos) break;  // Torn tail: never acknowledged.
    const std::string_view line(content.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      return absl::DataLossError(absl::StrCat(
          "ledger ", path_, " line ", line_number, " is not valid JSON"));
    }
    ASSIGN_OR_RETURN(LedgerRecord record, LedgerRecordFromJson(j));
    BatchLedger& ledger = LedgerFor(record.pool);
    if (record.refund) {
      ledger.RemoveLast(ClosedBatch{record.statistics, record.cost});
    } else {
      ledger.AppendUnchecked(ClosedBatch{record.statistics, record.cost});
    }
    next_sequence_ = std::max(next_sequence_, record.sequence + 1);
    records_.push_back(std::move(record));
  }
  // Drop a torn tail so the next append starts on a fresh line.
  if (start < content.size()) {
    if (::truncate(path_.c_str(), static_cast<off_t>(start)) != 0) {
      return ErrnoError("cannot truncate torn ledger tail", path_);
    }
  }
  return absl::OkStatus();
}

absl::Status LedgerStore::Append(const LedgerRecord& record) {
  if (path_.empty()) return absl::OkStatus();
  const std::string line = ToJson(record).dump() + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC,
                        0600);
  if (fd < 0) return ErrnoError("cannot open ledger", path_);
  absl::Status status = WriteAll(fd, line);
  if (status.ok() && ::fsync(fd) != 0) {
    status = ErrnoError("cannot sync ledger", path_);
  }
  ::close(fd);
  return status;
}

absl::StatusOr<std::string> LedgerStore::PoolFor(Tier tier,
                                                 std::string_view user) const {
  switch (tier) {
    case Tier::kDepositor:
      return std::string(kDepositorPool);
    case Tier::kSemiTrusted:
      if (!config_.semi_trusted_enabled) {
        return absl::PermissionDeniedError("semi-trusted access is disabled");
      }
      if (user.empty()) {
        return absl::InvalidArgumentError("semi-trusted access needs a user");
      }
      return absl::StrCat("user:", std::string(user));
    case Tier::kUntrusted:
      if (!config_.shared_pool_enabled) {
        return absl::PermissionDeniedError("the shared pool is disabled");
      }
      return std::string(kSharedPool);
  }
  return absl::InvalidArgumentError("unknown tier");
}

absl::StatusOr<DeductResult> LedgerStore::Decide(
    Tier tier, std::string_view user, std::span<const PrivacyParams> batch,
    bool commit) {
  ASSIGN_OR_RETURN(const std::string pool, PoolFor(tier, user));
  BatchLedger& ledger = LedgerFor(pool);
  ASSIGN_OR_RETURN(FilterDecision decision, FilterCompose(ledger, batch));
  DeductResult out;
  out.cost = decision.batch_cost;
  out.remaining = decision.remaining;
  out.accepted = decision.accepted;
  out.reason = decision.reason;
  if (out.accepted && !batch.empty() && tier == Tier::kUntrusted &&
      config_.shared_hourly_epsilon_cap > 0) {
    const int64_t now = Now();
    double recent = 0;
    for (const LedgerRecord& r : records_) {
      if (r.pool != pool || r.user != user || r.timestamp_ms <= now - kHourMs) {
        continue;
      }
      recent += r.refund ? -r.cost.epsilon : r.cost.epsilon;
    }
    if (!WithinTolerance(recent + out.cost.epsilon,
                         config_.shared_hourly_epsilon_cap)) {
      out.accepted = false;
      out.rate_limited = true;
      out.remaining = ledger.Remaining();
      out.reason = absl::StrCat("hourly limit: user has spent epsilon ",
                                recent, " of ", config_.shared_hourly_epsilon_cap,
                                " in the last hour");
      return out;
    }
  }
  if (!commit || !out.accepted || batch.empty()) return out;

  LedgerRecord record;
  record.sequence = next_sequence_;
  record.user = std::string(user);
  record.pool = pool;
  record.batch_id = absl::StrCat("b", next_sequence_);
  record.statistics.assign(batch.begin(), batch.end());
  record.cost = out.cost;
  record.timestamp_ms = Now();
  RETURN_IF_ERROR(Append(record));
  ++next_sequence_;
  ledger = std::move(decision.ledger);
  out.batch_id = record.batch_id;
  records_.push_back(std::move(record));
  return out;
}

absl::StatusOr<DeductResult> LedgerStore::Preview(
    Tier tier, std::string_view user, std::span<const PrivacyParams> batch) {
  std::lock_guard lock(mu_);
  return Decide(tier, user, batch, /*commit=*/false);
}

absl::StatusOr<DeductResult> LedgerStore::Deduct(
    Tier tier, std::string_view user, std::span<const PrivacyParams> batch) {
  std::lock_guard lock(mu_);
  return Decide(tier, user, batch, /*commit=*/true);
}

absl::Status LedgerStore::Refund(std::string_view pool,
                                 std::string_view batch_id) {
  std::lock_guard lock(mu_);
  const LedgerRecord* original = nullptr;
  for (const LedgerRecord& r : records_) {
    if (r.pool != pool || r.batch_id != batch_id) continue;
    if (r.refund) {
      return absl::FailedPreconditionError(absl::StrCat(
          "batch ", std::string(batch_id), " was already refunded"));
    }
    original = &r;
  }
  if (original == nullptr) {
    return absl::NotFoundError(
        absl::StrCat("no batch ", std::string(batch_id), " in pool ",
                     std::string(pool)));
  }
  LedgerRecord record = *original;
  record.sequence = next_sequence_;
  record.refund = true;
  record.timestamp_ms = Now();
  RETURN_IF_ERROR(Append(record));
  ++next_sequence_;
  LedgerFor(record.pool).RemoveLast(
      ClosedBatch{record.statistics, record.cost});
  records_.push_back(std::move(record));
  return absl::OkStatus();
}

absl::StatusOr<PrivacyParams> LedgerStore::Remaining(Tier tier,
                                                     std::string_view user) {
  std::lock_guard lock(mu_);
  ASSIGN_OR_RETURN(const std::string pool, PoolFor(tier, user));
  return LedgerFor(pool).Remaining();
}

absl::StatusOr<PrivacyParams> LedgerStore::PlanningBudget(
    Tier tier, std::string_view user, int64_t k) {
  std::lock_guard lock(mu_);
  ASSIGN_OR_RETURN(const std::string pool, PoolFor(tier, user));
  const BatchLedger& ledger = LedgerFor(pool);
  const PrivacyParams remaining = ledger.Remaining();
  const double share = std::min(
      ledger.global().delta * static_cast<double>(std::max<int64_t>(k, 1)) /
          static_cast<double>(ledger.statistic_capacity()),
      remaining.delta);
  return PrivacyParams{remaining.epsilon, share};
}

std::vector<LedgerRecord> LedgerStore::Records() const {
  std::lock_guard lock(mu_);
  return records_;
}

}  // namespace dpr
