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

#ifndef DPR_WORKSPACE_H_
#define DPR_WORKSPACE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/budgeter.h"
#include "dpr/dataset.h"
#include "dpr/release_engine.h"
#include "nlohmann/json.hpp"

namespace dpr {

// Depositor choices that fix a dataset's budget.
struct DatasetSettings {
  PrivacyParams global;
  SampleInfo sample;
  // Defaults to the whole effective epsilon.
  std::optional<double> depositor_epsilon;
};

nlohmann::json ToJson(const DatasetSettings& settings);
absl::StatusOr<DatasetSettings> DatasetSettingsFromJson(const nlohmann::json& j);

// vet -> amplify -> split for a dataset of `n` rows.
absl::StatusOr<GlobalBudget> BudgetFor(const DatasetSettings& settings,
                                       int64_t n);

// Registers a dataset under <data_dir>/<dataset_id>/ (data.csv,
// schema.json, settings.json). The CSV is ingested once to validate it.
// An existing registration is only replaced with `force`; its ledger and
// metadata are kept either way. Returns n.
absl::StatusOr<int64_t> RegisterDataset(const std::string& data_dir,
                                        const std::string& csv_path,
                                        const Schema& schema,
                                        const DatasetSettings& settings,
                                        bool force);

struct OpenOptions {
  int64_t analyst_statistic_capacity = 100;
  bool semi_trusted_enabled = true;
  bool shared_pool_enabled = true;
  double shared_hourly_epsilon_cap = 0;
  // Deterministic noise; test mode only.
  std::optional<uint64_t> seed;
};

// Loads a registered dataset with its durable ledger
// (<dir>/ledger.ndjson) and metadata directory (<dir>/metadata).
absl::StatusOr<std::unique_ptr<ReleaseEngine>> OpenDataset(
    const std::string& data_dir, const std::string& dataset_id,
    const OpenOptions& options);

std::vector<std::string> ListDatasets(const std::string& data_dir);

}  // namespace dpr

#endif  // DPR_WORKSPACE_H_
