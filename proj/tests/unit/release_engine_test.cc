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

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dpr/budgeter.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpr {
namespace {

using ::dpr::testing::Boolean;
using ::dpr::testing::Categorical;
using ::dpr::testing::Numeric;
using ::testing::HasSubstr;

// Every income value is this sentinel; it must never reach an output.
constexpr double kSentinel = 777777.125;
constexpr char kSentinelText[] = "777777.125";

Schema TestSchema() {
  Schema s;
  s.dataset_id = "survey";
  s.variables = {Numeric("age", 18, 90), Numeric("income", 0, 1e6),
                 Categorical("race", {"a", "b", "c"}), Boolean("employed")};
  return s;
}

std::shared_ptr<const Dataset> TestData(int n = 1000) {
  std::vector<std::vector<double>> cols(4);
  for (int i = 0; i < n; ++i) {
    cols[0].push_back(18 + (i * 7) % 73);
    cols[1].push_back(kSentinel);
    cols[2].push_back(i % 4);
    cols[3].push_back(i % 3 == 0);
  }
  auto d = DatasetFromColumns(TestSchema(), std::move(cols));
  EXPECT_TRUE(d.ok()) << d.status();
  return std::make_shared<const Dataset>(*std::move(d));
}

LedgerConfig Config() {
  LedgerConfig c;
  auto budget = SplitBudget({1.0, 1e-6}, {1.0, 1e-6}, 0.5);
  EXPECT_TRUE(budget.ok());
  c.budget = *budget;
  return c;
}

std::unique_ptr<ReleaseEngine> MakeEngine(const std::string& ledger_path = "",
                                          ReleaseEngineOptions options = {},
                                          uint64_t seed = 5) {
  auto ledger = LedgerStore::Open(ledger_path, Config());
  EXPECT_TRUE(ledger.ok()) << ledger.status();
  auto engine = ReleaseEngine::Create(TestSchema(), TestData(), *std::move(ledger),
                                      SecureRandom::Deterministic(seed), std::move(options));
  EXPECT_TRUE(engine.ok()) << engine.status();
  return *std::move(engine);
}

StatisticRequest Mean(std::string id, std::string variable, double epsilon) {
  StatisticRequest r;
  r.id = std::move(id);
  r.variable = std::move(variable);
  r.epsilon = epsilon;
  return r;
}

ReleaseBatch Batch(std::vector<StatisticRequest> requests) {
  return ReleaseBatch{std::move(requests), std::nullopt};
}


// Optimal composition of pure statistics given `delta`, when only the
// all-in subset is active: ln(e^{sum eps} - delta prod(1 + e^{eps_i})).
// The depositor pool grants its whole delta to the first batch.
double PureComposed(std::initializer_list<double> eps, double delta) {
  double sum = 0, prod = 1;
  for (double e : eps) {
    sum += e;
    prod *= 1 + std::exp(e);
  }
  return std::log(std::exp(sum) - delta * prod);
}

constexpr double kDepositorDelta = 5e-7;

TEST(ReleaseEngineTest, ReleasesAndDeductsExactly) {
  auto engine = MakeEngine();
  StatisticRequest hist;
  hist.id = "h";
  hist.variable = "race";
  hist.kind = StatisticKind::kHistogram;
  hist.epsilon = 0.1;
  const auto r = engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.2), hist}));
  DPR_ASSERT_OK(r);
  ASSERT_TRUE(r->accepted) << r->reason;
  EXPECT_EQ(r->batch_id, "b1");
  ASSERT_EQ(r->records.size(), 2u);
  EXPECT_EQ(r->records[0].audience, "public");
  EXPECT_EQ(r->records[1].value.labels().size(), 4u);
  EXPECT_EQ(r->cost.delta, kDepositorDelta);
  const double charged = PureComposed({0.2, 0.1}, kDepositorDelta);
  EXPECT_NEAR(r->cost.epsilon, charged, kOptimalSearchTolerance);
  EXPECT_GE(r->cost.epsilon, charged);
  EXPECT_LT(r->cost.epsilon, 0.3);
  EXPECT_NEAR(r->remaining.epsilon, 0.5 - r->cost.epsilon, 1e-15);
  EXPECT_EQ(engine->PublicMetadata().releases.size(), 2u);
}

TEST(ReleaseEngineTest, OverBudgetIsRejectedWithoutSpending) {
  auto engine = MakeEngine();
  const auto r = engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.6)}));
  DPR_ASSERT_OK(r);
  EXPECT_FALSE(r->accepted);
  EXPECT_EQ(r->rejection, Rejection::kBudget);
  EXPECT_TRUE(engine->ledger().Records().empty());
  EXPECT_TRUE(engine->PublicMetadata().releases.empty());
}

TEST(ReleaseEngineTest, TamperedClaimedTotalIsRejected) {
  auto engine = MakeEngine();
  ReleaseBatch batch = Batch({Mean("m", "age", 0.2), Mean("n", "age", 0.2)});
  batch.claimed_total = PrivacyParams{0.2, 0};
  const auto r = engine->Execute(Tier::kDepositor, "", batch);
  DPR_ASSERT_OK(r);
  EXPECT_FALSE(r->accepted);
  EXPECT_EQ(r->rejection, Rejection::kVerification);
  EXPECT_THAT(r->reason, HasSubstr("claims a total"));
  EXPECT_TRUE(engine->ledger().Records().empty());

  batch.claimed_total = PrivacyParams{0.4, 0};
  const auto ok = engine->Execute(Tier::kDepositor, "", batch);
  DPR_ASSERT_OK(ok);
  EXPECT_TRUE(ok->accepted) << ok->reason;
}

TEST(ReleaseEngineTest, OverstatedAccuracyIsRejected) {
  auto engine = MakeEngine();
  StatisticRequest r = Mean("m", "age", 0.1);
  // The true accuracy at epsilon 0.1 is 72 ln(20) / 100, about 2.16.
  r.accuracy = 1.0;
  const auto out = engine->Execute(Tier::kDepositor, "", Batch({r}));
  DPR_ASSERT_OK(out);
  EXPECT_EQ(out->rejection, Rejection::kVerification);
  EXPECT_THAT(out->reason, HasSubstr("claims accuracy"));
}

TEST(ReleaseEngineTest, AccuracyOnlyRequestsGetEpsilonFromAccuracy) {
  auto engine = MakeEngine();
  StatisticRequest r;
  r.id = "m";
  r.variable = "age";
  r.accuracy = 72 * std::log(20.0) / 1000 / 0.25;
  const auto out = engine->Execute(Tier::kDepositor, "", Batch({r}));
  DPR_ASSERT_OK(out);
  ASSERT_TRUE(out->accepted) << out->reason;
  EXPECT_NEAR(out->cost.epsilon, PureComposed({0.25}, kDepositorDelta),
              kOptimalSearchTolerance);
}

TEST(ReleaseEngineTest, EmptyBatchIsAcceptedForFree) {
  auto engine = MakeEngine();
  const auto r = engine->Execute(Tier::kDepositor, "", Batch({}));
  DPR_ASSERT_OK(r);
  EXPECT_TRUE(r->accepted);
  EXPECT_TRUE(r->records.empty());
  EXPECT_TRUE(engine->ledger().Records().empty());
}

TEST(ReleaseEngineTest, ClientErrorsFailBeforeDeduction) {
  auto engine = MakeEngine();
  EXPECT_EQ(engine->Execute(Tier::kDepositor, "",
                            Batch({Mean("m", "age", 0.1), Mean("m", "age", 0.1)}))
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "zip", 0.1)}))
                .status()
                .code(),
            absl::StatusCode::kNotFound);
  StatisticRequest t;
  t.id = "t";
  t.transform = TransformSpec{"age / 2", 0, 45};
  t.epsilon = 0.1;
  const auto bad = engine->Execute(Tier::kDepositor, "", Batch({t}));
  EXPECT_THAT(std::string(bad.status().message()), HasSubstr("division"));
  EXPECT_EQ(engine->Execute(Tier::kSemiTrusted, "../etc", Batch({Mean("m", "age", 0.1)}))
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_TRUE(engine->ledger().Records().empty());
}

TEST(ReleaseEngineTest, MechanismFailureRefunds) {
  auto engine = MakeEngine();
  StatisticRequest h;
  h.id = "h";
  h.variable = "age";
  h.kind = StatisticKind::kHistogram;
  h.bin_edges = {20, 50, 90};  // Does not start at the range minimum.
  h.epsilon = 0.3;
  const auto r = engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.1), h}));
  EXPECT_EQ(r.status().code(), absl::StatusCode::kInvalidArgument);
  const auto records = engine->ledger().Records();
  ASSERT_EQ(records.size(), 2u);
  EXPECT_FALSE(records[0].refund);
  EXPECT_TRUE(records[1].refund);
  const auto remaining = engine->ledger().Remaining(Tier::kDepositor, "");
  DPR_ASSERT_OK(remaining);
  EXPECT_NEAR(remaining->epsilon, 0.5, 1e-12);
  EXPECT_TRUE(engine->PublicMetadata().releases.empty());
}

TEST(ReleaseEngineTest, CrashAfterDeductionKeepsTheCharge) {
  const auto dir = ::dpr::testing::MakeTempDir("engine_crash");
  const std::string ledger = (dir / "ledger.ndjson").string();
  {
    ReleaseEngineOptions options;
    options.metadata_dir = (dir / "metadata").string();
    options.after_deduct = [] { return absl::AbortedError("simulated crash"); };
    auto engine = MakeEngine(ledger, options);
    const auto r = engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.3)}));
    EXPECT_EQ(r.status().code(), absl::StatusCode::kAborted);
  }
  ReleaseEngineOptions options;
  options.metadata_dir = (dir / "metadata").string();
  auto engine = MakeEngine(ledger, options);
  const auto remaining = engine->ledger().Remaining(Tier::kDepositor, "");
  DPR_ASSERT_OK(remaining);
  EXPECT_NEAR(remaining->epsilon, 0.5 - PureComposed({0.3}, kDepositorDelta),
              kOptimalSearchTolerance);
  EXPECT_TRUE(engine->PublicMetadata().releases.empty());
}

TEST(ReleaseEngineTest, RepeatedRequestDrawsFreshNoise) {
  auto engine = MakeEngine();
  const auto a = engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.1)}));
  const auto b = engine->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.1)}));
  DPR_ASSERT_OK(a);
  DPR_ASSERT_OK(b);
  ASSERT_TRUE(a->accepted && b->accepted);
  EXPECT_NE(a->records[0].value.scalar(), b->records[0].value.scalar());
  EXPECT_NE(a->batch_id, b->batch_id);
  // Only the first batch receives the pool's delta.
  EXPECT_EQ(b->cost.delta, 0);
  EXPECT_NEAR(b->remaining.epsilon, 0.5 - PureComposed({0.1}, kDepositorDelta) - 0.1,
              kOptimalSearchTolerance);
  EXPECT_NEAR(b->remaining.epsilon, a->remaining.epsilon - 0.1, 1e-15);
}

TEST(ReleaseEngineTest, SameSeedReproducesReleases) {
  auto a = MakeEngine("", {}, 9);
  auto b = MakeEngine("", {}, 9);
  const auto ra = a->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.1)}));
  const auto rb = b->Execute(Tier::kDepositor, "", Batch({Mean("m", "age", 0.1)}));
  DPR_ASSERT_OK(ra);
  DPR_ASSERT_OK(rb);
  EXPECT_EQ(ra->records[0].value.scalar(), rb->records[0].value.scalar());
}

TEST(ReleaseEngineTest, SemiTrustedUsersAreIsolated) {
  const auto dir = ::dpr::testing::MakeTempDir("engine_users");
  ReleaseEngineOptions options;
  options.metadata_dir = dir.string();
  auto engine = MakeEngine("", options);
  const auto alice = engine->Execute(Tier::kSemiTrusted, "alice", Batch({Mean("a", "age", 0.4)}));
  DPR_ASSERT_OK(alice);
  ASSERT_TRUE(alice->accepted) << alice->reason;
  EXPECT_EQ(alice->records[0].audience, "alice");
  // Bob's pool is untouched by Alice's spending.
  const auto bob = engine->Execute(Tier::kSemiTrusted, "bob", Batch({Mean("b", "age", 0.45)}));
  DPR_ASSERT_OK(bob);
  ASSERT_TRUE(bob->accepted) << bob->reason;
  const auto pub = engine->Execute(Tier::kDepositor, "", Batch({Mean("p", "age", 0.1)}));
  DPR_ASSERT_OK(pub);

  const auto alice_file = engine->UserMetadata("alice");
  DPR_ASSERT_OK(alice_file);
  std::vector<std::string> ids;
  for (const auto& r : alice_file->releases) ids.push_back(r.request_id);
  EXPECT_THAT(ids, ::testing::UnorderedElementsAre("p", "a"));
  EXPECT_EQ(engine->PublicMetadata().releases.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "user-alice.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "user-bob.json"));
  const auto on_disk = ReadMetadataFile((dir / "user-alice.json").string());
  DPR_ASSERT_OK(on_disk);
  EXPECT_EQ(on_disk->releases.size(), 2u);

  // Reopening restores both files.
  auto reopened = MakeEngine("", options);
  EXPECT_EQ(reopened->PublicMetadata().releases.size(), 1u);
  const auto bob_file = reopened->UserMetadata("bob");
  DPR_ASSERT_OK(bob_file);
  EXPECT_EQ(bob_file->releases.size(), 2u);
}

TEST(ReleaseEngineTest, SentinelNeverAppearsInOutputs) {
  const auto dir = ::dpr::testing::MakeTempDir("engine_sentinel");
  ReleaseEngineOptions options;
  options.metadata_dir = dir.string();
  auto engine = MakeEngine("", options);
  StatisticRequest cdf;
  cdf.id = "c";
  cdf.variable = "income";
  cdf.kind = StatisticKind::kCdf;
  cdf.epsilon = 0.1;
  StatisticRequest q;
  q.id = "q";
  q.variable = "income";
  q.kind = StatisticKind::kQuantile;
  q.epsilon = 0.1;
  StatisticRequest t;
  t.id = "t";
  t.transform = TransformSpec{"income * 2", 0, 2e6};
  t.epsilon = 0.1;
  StatisticRequest h;
  h.id = "h";
  h.variable = "income";
  h.kind = StatisticKind::kHistogram;
  h.epsilon = 0.1;
  const auto r = engine->Execute(Tier::kDepositor, "",
                                 Batch({Mean("m", "income", 0.1), cdf, q, t, h}));
  DPR_ASSERT_OK(r);
  ASSERT_TRUE(r->accepted) << r->reason;
  const auto scan = [](const std::string& text) {
    EXPECT_EQ(text.find(kSentinelText), std::string::npos) << text;
    EXPECT_EQ(text.find("1555554.25"), std::string::npos) << text;
  };
  for (const ReleaseRecord& record : r->records) scan(ToJson(record).dump());
  std::ostringstream file;
  file << std::ifstream((dir / "public.json").string()).rdbuf();
  scan(file.str());
}

TEST(ReleaseEngineTest, ConcurrentBatchesNeverOverspend) {
  auto engine = MakeEngine();
  std::vector<std::thread> threads;
  std::atomic<int> accepted{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      const auto r = engine->Execute(
          Tier::kDepositor, "", Batch({Mean("m" + std::to_string(i), "age", 0.2)}));
      if (r.ok() && r->accepted) ++accepted;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(accepted.load(), 2);
  EXPECT_EQ(engine->PublicMetadata().releases.size(), 2u);
}

TEST(ReleaseEngineTest, BatchJsonRoundTrip) {
  ReleaseBatch batch = Batch({Mean("m", "age", 0.1)});
  batch.claimed_total = PrivacyParams{0.1, 0};
  const auto back = ReleaseBatchFromJson(ToJson(batch));
  DPR_ASSERT_OK(back);
  EXPECT_EQ(ToJson(*back), ToJson(batch));
  EXPECT_FALSE(ReleaseBatchFromJson({{"request", nlohmann::json::array()}}).ok());
  EXPECT_FALSE(ReleaseBatchFromJson({{"requests", nlohmann::json::array()},
                                     {"claimed_total", {{"delta", 0}}}})
                   .ok());
}

TEST(ReleaseEngineTest, UserIdValidation) {
  DPR_EXPECT_OK(ValidateUserId("alice_01.x-y"));
  EXPECT_FALSE(ValidateUserId("").ok());
  EXPECT_FALSE(ValidateUserId("public").ok());
  EXPECT_FALSE(ValidateUserId(".hidden").ok());
  EXPECT_FALSE(ValidateUserId("a/b").ok());
  EXPECT_FALSE(ValidateUserId(std::string(129, 'a')).ok());
}

}  // namespace
}  // namespace dpr
