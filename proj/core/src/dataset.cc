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

#include "dpr/dataset.h"

#include <fstream>
#include <map>
#include <optional>
#include <set>

#include <boost/tokenizer.hpp>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "dpr/mechanisms.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

absl::Status Schema::Validate() const {
  if (dataset_id.empty()) return absl::InvalidArgumentError("schema without dataset_id");
  if (variables.empty()) return absl::InvalidArgumentError("schema without variables");
  std::set<std::string> seen;
  for (const VariableSpec& v : variables) {
    RETURN_IF_ERROR(v.Validate());
    if (!seen.insert(v.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate variable '", v.name, "'"));
    }
  }
  return absl::OkStatus();
}

nlohmann::json ToJson(const Schema& schema) {
  nlohmann::json vars = nlohmann::json::array();
  for (const VariableSpec& v : schema.variables) vars.push_back(ToJson(v));
  return {{"dataset_id", schema.dataset_id}, {"variables", std::move(vars)}};
}

absl::StatusOr<Schema> SchemaFromJson(const nlohmann::json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("schema must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "dataset_id" && key != "variables") {
      return absl::InvalidArgumentError(
          absl::StrCat("schema: unknown field '", key, "'"));
    }
  }
  Schema schema;
  if (!j.contains("dataset_id") || !j["dataset_id"].is_string()) {
    return absl::InvalidArgumentError("schema: dataset_id must be a string");
  }
  schema.dataset_id = j["dataset_id"].get<std::string>();
  if (!j.contains("variables") || !j["variables"].is_array()) {
    return absl::InvalidArgumentError("schema: variables must be an array");
  }
  for (const auto& v : j["variables"]) {
    absl::StatusOr<VariableSpec> spec = VariableFromJson(v);
    if (!spec.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("schema: ", spec.status().message()));
    }
    spec->n = 0;
    schema.variables.push_back(*std::move(spec));
  }
  RETURN_IF_ERROR(schema.Validate());
  return schema;
}

absl::StatusOr<Schema> LoadSchema(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open schema ", path));
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat("schema ", path, " is not valid JSON"));
  }
  return SchemaFromJson(j);
}

Dataset::Dataset(std::string id, std::vector<Column> columns, int64_t clamped,
                 int64_t missing)
    : id_(std::move(id)),
      columns_(std::move(columns)),
      clamped_(clamped),
      missing_(missing) {
  n_ = columns_.empty() ? 0 : static_cast<int64_t>(columns_.front().values.size());
  for (const Column& c : columns_) variables_.emplace(c.spec.name, c.spec);
}

const Column* Dataset::Find(std::string_view name) const {
  for (const Column& c : columns_) {
    if (c.spec.name == name) return &c;
  }
  return nullptr;
}

absl::StatusOr<Dataset> DatasetFromColumns(
    const Schema& schema, std::vector<std::vector<double>> values) {
  RETURN_IF_ERROR(schema.Validate());
  if (values.size() != schema.variables.size()) {
    return absl::InvalidArgumentError("one value vector per variable expected");
  }
  const size_t n = values.empty() ? 0 : values.front().size();
  if (n == 0) return absl::InvalidArgumentError("dataset has no rows");
  std::vector<Column> columns;
  int64_t clamped = 0, missing = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column '", schema.variables[i].name, "' has ", values[i].size(),
          " rows, expected ", n));
    }
    VariableSpec spec = schema.variables[i];
    spec.n = static_cast<int64_t>(n);
    if (spec.kind == VariableKind::kCategorical) {
      // Level indices; anything outside the levels becomes "other".
      Column column{spec, std::move(values[i])};
      for (double& v : column.values) {
        if (std::isnan(v)) {
          ++missing;
          continue;
        }
        const double other = static_cast<double>(spec.OtherIndex());
        if (!(v >= 0 && v <= other) || v != std::floor(v)) {
          v = other;
          ++clamped;
        }
      }
      columns.push_back(std::move(column));
      continue;
    }
    ASSIGN_OR_RETURN(ClampResult r, ClampValues(values[i], spec));
    clamped += r.clamped;
    missing += r.missing;
    columns.push_back(std::move(r.column));
  }
  return Dataset(schema.dataset_id, std::move(columns), clamped, missing);
}

absl::StatusOr<Dataset> IngestCsv(std::istream& in, const Schema& schema) {
  RETURN_IF_ERROR(schema.Validate());
  std::string line;
  if (!std::getline(in, line)) return absl::InvalidArgumentError("empty CSV file");
  const boost::escaped_list_separator<char> separator('\\', ',', '"');

  std::map<std::string, size_t> wanted;
  for (size_t i = 0; i < schema.variables.size(); ++i) {
    wanted.emplace(schema.variables[i].name, i);
  }
  // Header position -> schema index.
  std::vector<size_t> position;
  std::set<std::string> found;
  try {
    std::string header(StripCr(line));
    Tokenizer tokens(header, separator);
    for (std::string name : tokens) {
      const absl::string_view trimmed = absl::StripAsciiWhitespace(name);
      name = std::string(trimmed.data(), trimmed.size());
      const auto it = wanted.find(name);
      if (it == wanted.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("CSV column '", name, "' is not in the schema"));
      }
      if (!found.insert(name).second) {
        return absl::InvalidArgumentError(
            absl::StrCat("CSV column '", name, "' appears twice"));
      }
      position.push_back(it->second);
    }
  } catch (const boost::escaped_list_error& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad CSV header: ", e.what()));
  }
  for (const VariableSpec& v : schema.variables) {
    if (!found.contains(v.name)) {
      return absl::InvalidArgumentError(
          absl::StrCat("schema variable '", v.name, "' has no CSV column"));
    }
  }

  std::vector<TokenClamper> clampers;
  clampers.reserve(schema.variables.size());
  for (const VariableSpec& v : schema.variables) {
    clampers.emplace_back(v);
  }
  int64_t row = 0;
  while (std::getline(in, line)) {
    const std::string_view content = StripCr(line);
    if (content.empty()) continue;
    ++row;
    size_t field = 0;
    try {
      const std::string owned(content);
      Tokenizer tokens(owned, separator);
      for (const std::string& token : tokens) {
        if (field >= position.size()) {
          ++field;
          break;
        }
        // The clamper counts rows itself, so its errors carry `row`.
        RETURN_IF_ERROR(clampers[position[field]].Add(token));
        ++field;
      }
    } catch (const boost::escaped_list_error& e) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", row, ": malformed CSV: ", e.what()));
    }
    if (field != position.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "row ", row, ": expected ", position.size(), " fields"));
    }
  }
  if (row == 0) return absl::InvalidArgumentError("CSV file has no data rows");

  std::vector<Column> columns;
  int64_t clamped = 0, missing = 0;
  for (TokenClamper& c : clampers) {
    ClampResult r = std::move(c).Finish();
    clamped += r.clamped;
    missing += r.missing;
    columns.push_back(std::move(r.column));
  }
  return Dataset(schema.dataset_id, std::move(columns), clamped, missing);
}

absl::StatusOr<Dataset> IngestCsvFile(const std::string& path,
                                      const Schema& schema) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  return IngestCsv(in, schema);
}

}  // namespace dpr
