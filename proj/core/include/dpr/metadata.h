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

#ifndef DPR_METADATA_H_
#define DPR_METADATA_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/dataset.h"
#include "dpr/request.h"
#include "dpr/statistic.h"
#include "nlohmann/json.hpp"

namespace dpr {

inline constexpr int kMetadataFormatVersion = 1;
inline constexpr std::string_view kPublicAudience = "public";

// A published DP value with the parameters it was produced under.
struct ReleaseRecord {
  // Records exist only around a mechanism output.
  explicit ReleaseRecord(ReleaseValue v) : value(std::move(v)) {}

  std::string request_id;
  // Variable name, or "transform:<request id>" for derived columns.
  std::string variable;
  std::optional<TransformSpec> transform;
  // Quantile level; quantile releases only.
  double quantile = 0;
  ReleaseValue value;
  double alpha = kDefaultAlpha;
  std::string batch_id;
  // ISO 8601, UTC.
  std::string timestamp;
  // "public" or the user id whose personal file holds the record.
  std::string audience;
};

struct MetadataFile {
  int format_version = kMetadataFormatVersion;
  std::string dataset_id;
  int64_t n = 0;
  std::string audience;
  std::vector<VariableSpec> variables;
  std::vector<ReleaseRecord> releases;
};

// Serialization writes only the documented public fields and then checks
// the document against the field whitelist.
nlohmann::json ToJson(const ReleaseRecord& record);
absl::StatusOr<nlohmann::json> ToJson(const MetadataFile& file);
absl::StatusOr<MetadataFile> MetadataFromJson(const nlohmann::json& json);

// Fails (kFailedPrecondition) if the document contains any field that is
// not part of the public format, at any level.
absl::Status CheckPublicFields(const nlohmann::json& document);

// Public file: schema facts, n and the public releases.
absl::StatusOr<MetadataFile> BuildPublicMetadata(
    const Schema& schema, int64_t n, std::span<const ReleaseRecord> releases);

// A user's file: the public file plus that user's own releases.
absl::StatusOr<MetadataFile> BuildUserMetadata(
    const MetadataFile& public_file, std::string_view user,
    std::span<const ReleaseRecord> user_releases);

// Writes via a temporary file, fsync and rename.
absl::Status WriteMetadataFile(const std::string& path,
                               const MetadataFile& file);
absl::StatusOr<MetadataFile> ReadMetadataFile(const std::string& path);

// Current UTC time in ISO 8601 with milliseconds.
std::string NowIso8601();

}  // namespace dpr

#endif  // DPR_METADATA_H_
