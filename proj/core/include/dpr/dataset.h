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

#ifndef DPR_DATASET_H_
#define DPR_DATASET_H_

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpr/request.h"
#include "dpr/variable.h"
#include "nlohmann/json.hpp"

namespace dpr {

// Depositor-supplied description of a dataset.
struct Schema {
  std::string dataset_id;
  std::vector<VariableSpec> variables;

  absl::Status Validate() const;
};

nlohmann::json ToJson(const Schema& schema);
absl::StatusOr<Schema> SchemaFromJson(const nlohmann::json& json);
absl::StatusOr<Schema> LoadSchema(const std::string& path);

// Clamped, in-memory data. The only object in the library holding raw
// values; nothing in it is serializable.
class Dataset {
 public:
  Dataset(std::string id, std::vector<Column> columns, int64_t clamped,
          int64_t missing);

  const std::string& id() const { return id_; }
  int64_t n() const { return n_; }
  const std::vector<Column>& columns() const { return columns_; }
  const VariableMap& variables() const { return variables_; }
  // Values truncated into their declared range (or mapped to "other").
  int64_t clamped() const { return clamped_; }
  int64_t missing() const { return missing_; }

  const Column* Find(std::string_view name) const;

 private:
  std::string id_;
  int64_t n_ = 0;
  std::vector<Column> columns_;
  VariableMap variables_;
  int64_t clamped_ = 0;
  int64_t missing_ = 0;
};

// Builds a dataset from already-parsed columns (numeric and boolean kinds
// hold numbers; categorical ones level indices). Values are clamped.
absl::StatusOr<Dataset> DatasetFromColumns(
    const Schema& schema, std::vector<std::vector<double>> values);

// Reads a CSV file with a header row. The header must name exactly the
// schema's variables, in any order. Quoted fields may not span lines.
absl::StatusOr<Dataset> IngestCsv(std::istream& in, const Schema& schema);
absl::StatusOr<Dataset> IngestCsvFile(const std::string& path,
                                      const Schema& schema);

}  // namespace dpr

#endif  // DPR_DATASET_H_
