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

#include "dpr/workspace.h"

#include <filesystem>
#include <fstream>

#include "absl/strings/str_cat.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

absl::Status WriteJson(const fs::path& path, const json& document) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << document.dump(2) << "\n";
    if (!out) return absl::InternalError(absl::StrCat("cannot write ", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) return absl::InternalError(absl::StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

absl::StatusOr<json> ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path.string(), " is not valid JSON"));
  }
  return j;
}

absl::Status CheckDatasetId(const std::string& id) {
  if (id.empty() || id.front() == '.') {
    return absl::InvalidArgumentError("invalid dataset id");
  }
  for (const char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.')) {
      return absl::InvalidArgumentError(absl::StrCat("invalid dataset id '", id, "'"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

json ToJson(const DatasetSettings& s) {
  json out = {{"global", {{"epsilon", s.global.epsilon}, {"delta", s.global.delta}}}};
  if (s.sample.secret) out["population"] = s.sample.m;
  if (s.depositor_epsilon.has_value()) out["depositor_epsilon"] = *s.depositor_epsilon;
  return out;
}

absl::StatusOr<DatasetSettings> DatasetSettingsFromJson(const json& j) {
  DatasetSettings s;
  try {
    s.global.epsilon = j.at("global").at("epsilon").get<double>();
    s.global.delta = j.at("global").value("delta", 0.0);
    if (j.contains("population")) {
      s.sample.secret = true;
      s.sample.m = j["population"].get<double>();
    }
    if (j.contains("depositor_epsilon")) {
      s.depositor_epsilon = j["depositor_epsilon"].get<double>();
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad settings: ", e.what()));
  }
  return s;
}

absl::StatusOr<GlobalBudget> BudgetFor(const DatasetSettings& settings,
                                       int64_t n) {
  const VetResult vet = VetGlobalParams(settings.global);
  if (!vet.accepted) {
    return absl::InvalidArgumentError(
        absl::StrCat("global privacy parameters rejected: ", vet.reason));
  }
  SampleInfo sample = settings.sample;
  sample.n = n;
  ASSIGN_OR_RETURN(const PrivacyParams effective,
                   AmplifyBudget(settings.global, sample));
  return SplitBudget(settings.global, effective,
                     settings.depositor_epsilon.value_or(effective.epsilon));
}

absl::StatusOr<int64_t> RegisterDataset(const std::string& data_dir,
                                        const std::string& csv_path,
                                        const Schema& schema,
                                        const DatasetSettings& settings,
                                        bool force) {
  RETURN_IF_ERROR(CheckDatasetId(schema.dataset_id));
  ASSIGN_OR_RETURN(const Dataset dataset, IngestCsvFile(csv_path, schema));
  RETURN_IF_ERROR(BudgetFor(settings, dataset.n()).status());

  const fs::path dir = fs::path(data_dir) / schema.dataset_id;
  if (fs::exists(dir / "schema.json") && !force) {
    return absl::AlreadyExistsError(absl::StrCat(
        "dataset '", schema.dataset_id, "' is already registered; use --force to replace it"));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  fs::copy_file(csv_path, dir / "data.csv.tmp", fs::copy_options::overwrite_existing, ec);
  if (!ec) fs::rename(dir / "data.csv.tmp", dir / "data.csv", ec);
  if (ec) return absl::InternalError(absl::StrCat("cannot copy data: ", ec.message()));
  RETURN_IF_ERROR(WriteJson(dir / "schema.json", ToJson(schema)));
  RETURN_IF_ERROR(WriteJson(dir / "settings.json", ToJson(settings)));
  return dataset.n();
}

absl::StatusOr<std::unique_ptr<ReleaseEngine>> OpenDataset(
    const std::string& data_dir, const std::string& dataset_id,
    const OpenOptions& options) {
  RETURN_IF_ERROR(CheckDatasetId(dataset_id));
  const fs::path dir = fs::path(data_dir) / dataset_id;
  if (!fs::exists(dir / "schema.json")) {
    return absl::NotFoundError(absl::StrCat("unknown dataset '", dataset_id, "'"));
  }
  ASSIGN_OR_RETURN(const json schema_json, ReadJson(dir / "schema.json"));
  ASSIGN_OR_RETURN(Schema schema, SchemaFromJson(schema_json));
  ASSIGN_OR_RETURN(const json settings_json, ReadJson(dir / "settings.json"));
  ASSIGN_OR_RETURN(const DatasetSettings settings,
                   DatasetSettingsFromJson(settings_json));
  ASSIGN_OR_RETURN(Dataset dataset, IngestCsvFile((dir / "data.csv").string(), schema));
  LedgerConfig ledger_config;
  ASSIGN_OR_RETURN(ledger_config.budget, BudgetFor(settings, dataset.n()));
  ledger_config.analyst_statistic_capacity = options.analyst_statistic_capacity;
  ledger_config.semi_trusted_enabled = options.semi_trusted_enabled;
  ledger_config.shared_pool_enabled = options.shared_pool_enabled;
  ledger_config.shared_hourly_epsilon_cap = options.shared_hourly_epsilon_cap;
  ASSIGN_OR_RETURN(std::unique_ptr<LedgerStore> ledger,
                   LedgerStore::Open((dir / "ledger.ndjson").string(), ledger_config));
  SecureRandom rng = options.seed.has_value()
                         ? SecureRandom::Deterministic(*options.seed)
                         : SecureRandom::System();
  ReleaseEngineOptions engine_options;
  engine_options.metadata_dir = (dir / "metadata").string();
  return ReleaseEngine::Create(std::move(schema),
                               std::make_shared<const Dataset>(std::move(dataset)),
                               std::move(ledger), std::move(rng), engine_options);
}

std::vector<std::string> ListDatasets(const std::string& data_dir) {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(data_dir, ec)) {
    if (entry.is_directory() && fs::exists(entry.path() / "schema.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dpr
