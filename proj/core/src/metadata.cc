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

#include "dpr/metadata.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace internal {

struct MetadataAccess {
  // Rebuilds a value that was already published; used when reading
  // metadata files back.
  static ReleaseValue Restore(StatisticKind kind, std::string mechanism,
                              std::vector<double> values,
                              std::vector<double> grid,
                              std::vector<std::string> labels, double epsilon,
                              double delta, double accuracy,
                              double confidence_level) {
    ReleaseValue v;
    v.kind_ = kind;
    v.mechanism_ = std::move(mechanism);
    v.values_ = std::move(values);
    v.grid_ = std::move(grid);
    v.labels_ = std::move(labels);
    v.epsilon_spent_ = epsilon;
    v.delta_spent_ = delta;
    v.accuracy_ = accuracy;
    v.confidence_level_ = confidence_level;
    return v;
  }
};

}  // namespace internal

namespace {

using nlohmann::json;

const std::set<std::string>& TopFields() {
  static const auto* kFields = new std::set<std::string>{
      "format_version", "dataset_id", "n", "audience", "variables",
      "releases"};
  return *kFields;
}

const std::set<std::string>& VariableFields() {
  static const auto* kFields = new std::set<std::string>{
      "name", "kind", "lower", "upper", "categories", "description"};
  return *kFields;
}

const std::set<std::string>& ReleaseFields() {
  static const auto* kFields = new std::set<std::string>{
      "request_id", "statistic",  "variable",         "transform",
      "quantile",   "mechanism",  "epsilon",          "delta",
      "accuracy",   "alpha",      "confidence_level", "value",
      "grid",       "labels",     "batch_id",         "timestamp",
      "audience"};
  return *kFields;
}

const std::set<std::string>& TransformFields() {
  static const auto* kFields =
      new std::set<std::string>{"program", "lower", "upper"};
  return *kFields;
}

absl::Status CheckObject(const json& object, const std::set<std::string>& allowed,
                         std::string_view where) {
  if (!object.is_object()) {
    return absl::FailedPreconditionError(
        absl::StrCat(std::string(where), " must be an object"));
  }
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) {
      return absl::FailedPreconditionError(absl::StrCat(
          "field '", key, "' in ", std::string(where),
          " is not part of the public metadata format"));
    }
  }
  return absl::OkStatus();
}

bool IsScalarKind(StatisticKind kind) {
  return kind == StatisticKind::kMean || kind == StatisticKind::kQuantile;
}

absl::Status Fsync(const std::string& path, int flags) {
  const int fd = ::open(path.c_str(), flags | O_CLOEXEC);
  if (fd < 0) return absl::OkStatus();
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) {
    return absl::InternalError(
        absl::StrCat("fsync ", path, ": ", std::strerror(errno)));
  }
  return absl::OkStatus();
}

}  // namespace

std::string NowIso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch())
                      .count() %
                  1000;
  std::tm tm{};
  gmtime_r(&seconds, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%S", &tm);
  return absl::StrFormat("%s.%03dZ", buffer, ms);
}

json ToJson(const ReleaseRecord& r) {
  const ReleaseValue& v = r.value;
  json out = {{"request_id", r.request_id},
              {"statistic", std::string(StatisticKindName(v.kind()))},
              {"variable", r.variable},
              {"mechanism", v.mechanism()},
              {"epsilon", v.epsilon_spent()},
              {"delta", v.delta_spent()},
              {"accuracy", v.accuracy()},
              {"alpha", r.alpha},
              {"confidence_level", v.confidence_level()},
              {"batch_id", r.batch_id},
              {"timestamp", r.timestamp},
              {"audience", r.audience}};
  if (IsScalarKind(v.kind())) {
    out["value"] = v.scalar();
  } else {
    out["value"] = v.values();
  }
  if (!v.grid().empty()) out["grid"] = v.grid();
  if (!v.labels().empty()) out["labels"] = v.labels();
  if (v.kind() == StatisticKind::kQuantile) out["quantile"] = r.quantile;
  if (r.transform.has_value()) {
    out["transform"] = {{"program", r.transform->program},
                        {"lower", r.transform->lower},
                        {"upper", r.transform->upper}};
  }
  return out;
}

absl::Status CheckPublicFields(const json& document) {
  RETURN_IF_ERROR(CheckObject(document, TopFields(), "metadata"));
  if (document.contains("variables")) {
    for (const json& v : document["variables"]) {
      RETURN_IF_ERROR(CheckObject(v, VariableFields(), "variables[]"));
    }
  }
  if (document.contains("releases")) {
    for (const json& r : document["releases"]) {
      RETURN_IF_ERROR(CheckObject(r, ReleaseFields(), "releases[]"));
      if (r.contains("transform")) {
        RETURN_IF_ERROR(
            CheckObject(r["transform"], TransformFields(), "releases[].transform"));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<json> ToJson(const MetadataFile& file) {
  json variables = json::array();
  for (const VariableSpec& v : file.variables) variables.push_back(ToJson(v));
  json releases = json::array();
  for (const ReleaseRecord& r : file.releases) releases.push_back(ToJson(r));
  json out = {{"format_version", file.format_version},
              {"dataset_id", file.dataset_id},
              {"n", file.n},
              {"audience", file.audience},
              {"variables", std::move(variables)},
              {"releases", std::move(releases)}};
  RETURN_IF_ERROR(CheckPublicFields(out));
  return out;
}

absl::StatusOr<MetadataFile> MetadataFromJson(const json& j) {
  RETURN_IF_ERROR(CheckPublicFields(j));
  MetadataFile file;
  try {
    file.format_version = j.at("format_version").get<int>();
    if (file.format_version != kMetadataFormatVersion) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unsupported metadata format_version ", file.format_version));
    }
    file.dataset_id = j.at("dataset_id").get<std::string>();
    file.n = j.at("n").get<int64_t>();
    file.audience = j.at("audience").get<std::string>();
    for (const json& v : j.at("variables")) {
      ASSIGN_OR_RETURN(VariableSpec spec, VariableFromJson(v));
      spec.n = file.n;
      file.variables.push_back(std::move(spec));
    }
    for (const json& r : j.at("releases")) {
      ASSIGN_OR_RETURN(const StatisticKind kind,
                       ParseStatisticKind(r.at("statistic").get<std::string>()));
      std::vector<double> values;
      if (IsScalarKind(kind)) {
        values.push_back(r.at("value").get<double>());
      } else {
        values = r.at("value").get<std::vector<double>>();
      }
      ReleaseRecord record(internal::MetadataAccess::Restore(
          kind, r.at("mechanism").get<std::string>(), std::move(values),
          r.value("grid", std::vector<double>{}),
          r.value("labels", std::vector<std::string>{}),
          r.at("epsilon").get<double>(), r.at("delta").get<double>(),
          r.at("accuracy").get<double>(),
          r.at("confidence_level").get<double>()));
      record.request_id = r.at("request_id").get<std::string>();
      record.variable = r.at("variable").get<std::string>();
      record.alpha = r.at("alpha").get<double>();
      record.batch_id = r.at("batch_id").get<std::string>();
      record.timestamp = r.at("timestamp").get<std::string>();
      record.audience = r.at("audience").get<std::string>();
      record.quantile = r.value("quantile", 0.0);
      if (r.contains("transform")) {
        const json& t = r["transform"];
        record.transform = TransformSpec{t.at("program").get<std::string>(),
                                         t.at("lower").get<double>(),
                                         t.at("upper").get<double>()};
      }
      file.releases.push_back(std::move(record));
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad metadata: ", e.what()));
  }
  return file;
}

absl::StatusOr<MetadataFile> BuildPublicMetadata(
    const Schema& schema, int64_t n, std::span<const ReleaseRecord> releases) {
  RETURN_IF_ERROR(schema.Validate());
  MetadataFile file;
  file.dataset_id = schema.dataset_id;
  file.n = n;
  file.audience = std::string(kPublicAudience);
  file.variables = schema.variables;
  for (const ReleaseRecord& r : releases) {
    if (r.audience != kPublicAudience) {
      return absl::FailedPreconditionError(absl::StrCat(
          "release '", r.request_id, "' belongs to '", r.audience,
          "' and cannot go into the public file"));
    }
    file.releases.push_back(r);
  }
  // Serializing runs the field whitelist.
  RETURN_IF_ERROR(ToJson(file).status());
  return file;
}

absl::StatusOr<MetadataFile> BuildUserMetadata(
    const MetadataFile& public_file, std::string_view user,
    std::span<const ReleaseRecord> user_releases) {
  if (public_file.audience != kPublicAudience) {
    return absl::InvalidArgumentError("base file is not the public file");
  }
  if (user.empty() || user == kPublicAudience) {
    return absl::InvalidArgumentError("invalid user id");
  }
  MetadataFile file = public_file;
  file.audience = std::string(user);
  for (const ReleaseRecord& r : user_releases) {
    if (r.audience != user) {
      return absl::FailedPreconditionError(absl::StrCat(
          "release '", r.request_id, "' does not belong to user '",
          std::string(user), "'"));
    }
    file.releases.push_back(r);
  }
  RETURN_IF_ERROR(ToJson(file).status());
  return file;
}

absl::Status WriteMetadataFile(const std::string& path,
                               const MetadataFile& file) {
  ASSIGN_OR_RETURN(const json document, ToJson(file));
  const std::string text = document.dump(2) + "\n";
  const std::string tmp = absl::StrCat(path, ".tmp.", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return absl::InternalError(absl::StrCat("cannot write ", tmp));
    out << text;
    out.flush();
    if (!out) return absl::InternalError(absl::StrCat("cannot write ", tmp));
  }
  RETURN_IF_ERROR(Fsync(tmp, O_RDONLY));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot rename ", tmp, ": ", ec.message()));
  }
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return Fsync(dir.empty() ? "." : dir, O_RDONLY | O_DIRECTORY);
}

absl::StatusOr<MetadataFile> ReadMetadataFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("no metadata file ", path));
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    return absl::DataLossError(absl::StrCat(path, " is not valid JSON"));
  }
  return MetadataFromJson(j);
}

}  // namespace dpr
