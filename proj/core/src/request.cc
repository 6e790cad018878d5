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

#include "dpr/request.h"

#include <bit>
#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpr/status_macros.h"

namespace dpr {
namespace {

using nlohmann::json;

absl::Status CheckKeys(const json& object, const std::set<std::string>& allowed,
                       std::string_view what) {
  if (!object.is_object()) {
    return absl::InvalidArgumentError(absl::StrCat(std::string(what), " must be an object"));
  }
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(what), ": unknown field '", key, "'"));
    }
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status ReadField(const json& object, const char* key, T& out) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return absl::OkStatus();
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("field '", key, "': ", e.what()));
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status ReadOptional(const json& object, const char* key,
                          std::optional<T>& out) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return absl::OkStatus();
  T value;
  RETURN_IF_ERROR(ReadField(object, key, value));
  out = value;
  return absl::OkStatus();
}

}  // namespace

absl::Status StatisticRequest::Validate() const {
  if (id.empty()) return absl::InvalidArgumentError("request without id");
  if (variable.empty() == !transform.has_value()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "request '", id, "' needs exactly one of variable and transform"));
  }
  if (transform.has_value()) {
    if (transform->program.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("request '", id, "': empty transformation"));
    }
    if (!std::isfinite(transform->lower) || !std::isfinite(transform->upper) ||
        !(transform->lower < transform->upper)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "request '", id, "': declared range needs lower < upper"));
    }
  }
  if (epsilon.has_value() && (!(*epsilon > 0) || !std::isfinite(*epsilon))) {
    return absl::InvalidArgumentError(
        absl::StrCat("request '", id, "': epsilon must be positive"));
  }
  if (!(delta >= 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("request '", id, "': delta must lie in [0, 1)"));
  }
  if (accuracy.has_value() && (!(*accuracy > 0) || !std::isfinite(*accuracy))) {
    return absl::InvalidArgumentError(
        absl::StrCat("request '", id, "': accuracy must be positive"));
  }
  if (!(alpha > 0 && alpha < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("request '", id, "': alpha must lie in (0, 1)"));
  }
  switch (kind) {
    case StatisticKind::kHistogram:
      if (bin_edges.empty() && bins < 1) {
        return absl::InvalidArgumentError(
            absl::StrCat("request '", id, "': histogram needs bins >= 1"));
      }
      break;
    case StatisticKind::kCdf:
      if (grid_size < 2 ||
          !std::has_single_bit(static_cast<uint64_t>(grid_size))) {
        return absl::InvalidArgumentError(absl::StrCat(
            "request '", id, "': CDF grid size must be a power of two >= 2"));
      }
      break;
    case StatisticKind::kQuantile:
      if (!(quantile > 0 && quantile < 1)) {
        return absl::InvalidArgumentError(
            absl::StrCat("request '", id, "': quantile must lie in (0, 1)"));
      }
      if (candidates < 1) {
        return absl::InvalidArgumentError(
            absl::StrCat("request '", id, "': candidates must be >= 1"));
      }
      break;
    case StatisticKind::kMean:
      break;
  }
  if (snapping && kind != StatisticKind::kMean) {
    return absl::InvalidArgumentError(absl::StrCat(
        "request '", id, "': the snapping mechanism is only offered for means"));
  }
  return absl::OkStatus();
}

std::string StatisticRequest::Target() const {
  return transform.has_value() ? absl::StrCat("transform:", id) : variable;
}

VariableMap MakeVariableMap(std::span<const VariableSpec> variables) {
  VariableMap out;
  for (const VariableSpec& v : variables) out.emplace(v.name, v);
  return out;
}

absl::StatusOr<VariableSpec> ResolveSpec(const StatisticRequest& request,
                                         const VariableMap& variables,
                                         int64_t n) {
  VariableSpec spec;
  if (request.transform.has_value()) {
    spec.name = request.Target();
    spec.kind = VariableKind::kNumeric;
    spec.lower = request.transform->lower;
    spec.upper = request.transform->upper;
  } else {
    const auto it = variables.find(request.variable);
    if (it == variables.end()) {
      return absl::NotFoundError(absl::StrCat(
          "request '", request.id, "': unknown variable '", request.variable,
          "'"));
    }
    spec = it->second;
  }
  spec.n = n;
  RETURN_IF_ERROR(spec.Validate());
  if (spec.kind == VariableKind::kCategorical &&
      request.kind != StatisticKind::kHistogram) {
    return absl::InvalidArgumentError(absl::StrCat(
        "request '", request.id, "': ", std::string(StatisticKindName(request.kind)),
        " needs a numeric variable, '", spec.name, "' is categorical"));
  }
  return spec;
}

absl::StatusOr<AccuracyContext> AccuracyContextFor(
    const StatisticRequest& request, const VariableMap& variables, int64_t n) {
  RETURN_IF_ERROR(request.Validate());
  ASSIGN_OR_RETURN(const VariableSpec spec, ResolveSpec(request, variables, n));
  AccuracyContext context;
  context.n = n;
  context.range_width = spec.range().width();
  context.grid_size = request.grid_size;
  context.candidates = request.candidates;
  context.snapping = request.snapping;
  switch (spec.kind) {
    case VariableKind::kCategorical:
      context.bins = static_cast<int64_t>(spec.CategoryCount());
      break;
    case VariableKind::kBoolean:
      context.bins = 2;
      break;
    case VariableKind::kNumeric:
      context.bins = request.bin_edges.empty()
                         ? request.bins
                         : static_cast<int64_t>(request.bin_edges.size()) - 1;
      break;
  }
  return context;
}

nlohmann::json ToJson(const StatisticRequest& r) {
  json out = {{"id", r.id},
              {"statistic", std::string(StatisticKindName(r.kind))},
              {"delta", r.delta},
              {"alpha", r.alpha},
              {"hold", r.hold}};
  if (r.transform.has_value()) {
    out["transform"] = {{"program", r.transform->program},
                        {"lower", r.transform->lower},
                        {"upper", r.transform->upper}};
  } else {
    out["variable"] = r.variable;
  }
  if (r.epsilon.has_value()) out["epsilon"] = *r.epsilon;
  if (r.accuracy.has_value()) out["accuracy"] = *r.accuracy;
  switch (r.kind) {
    case StatisticKind::kHistogram:
      if (r.bin_edges.empty()) {
        out["bins"] = r.bins;
      } else {
        out["bin_edges"] = r.bin_edges;
      }
      break;
    case StatisticKind::kCdf:
      out["grid_size"] = r.grid_size;
      break;
    case StatisticKind::kQuantile:
      out["quantile"] = r.quantile;
      out["candidates"] = r.candidates;
      break;
    case StatisticKind::kMean:
      if (r.snapping) out["mechanism"] = "snapping";
      break;
  }
  return out;
}

absl::StatusOr<StatisticRequest> RequestFromJson(const nlohmann::json& j) {
  RETURN_IF_ERROR(CheckKeys(
      j,
      {"id", "variable", "transform", "statistic", "epsilon", "delta",
       "accuracy", "alpha", "confidence", "hold", "bins", "bin_edges",
       "grid_size", "quantile", "candidates", "mechanism"},
      "request"));
  StatisticRequest r;
  RETURN_IF_ERROR(ReadField(j, "id", r.id));
  RETURN_IF_ERROR(ReadField(j, "variable", r.variable));
  std::string statistic;
  RETURN_IF_ERROR(ReadField(j, "statistic", statistic));
  if (!statistic.empty()) {
    ASSIGN_OR_RETURN(r.kind, ParseStatisticKind(statistic));
  }
  RETURN_IF_ERROR(ReadOptional(j, "epsilon", r.epsilon));
  RETURN_IF_ERROR(ReadField(j, "delta", r.delta));
  RETURN_IF_ERROR(ReadOptional(j, "accuracy", r.accuracy));
  RETURN_IF_ERROR(ReadField(j, "alpha", r.alpha));
  std::optional<double> confidence;
  RETURN_IF_ERROR(ReadOptional(j, "confidence", confidence));
  if (confidence.has_value()) r.alpha = 1 - *confidence;
  RETURN_IF_ERROR(ReadField(j, "hold", r.hold));
  RETURN_IF_ERROR(ReadField(j, "bins", r.bins));
  RETURN_IF_ERROR(ReadField(j, "bin_edges", r.bin_edges));
  RETURN_IF_ERROR(ReadField(j, "grid_size", r.grid_size));
  RETURN_IF_ERROR(ReadField(j, "quantile", r.quantile));
  RETURN_IF_ERROR(ReadField(j, "candidates", r.candidates));
  std::string mechanism = "laplace";
  RETURN_IF_ERROR(ReadField(j, "mechanism", mechanism));
  if (mechanism == "snapping") {
    r.snapping = true;
  } else if (mechanism != "laplace") {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown mechanism '", mechanism, "'"));
  }
  if (const auto it = j.find("transform"); it != j.end() && !it->is_null()) {
    RETURN_IF_ERROR(
        CheckKeys(*it, {"program", "lower", "upper"}, "transform"));
    TransformSpec t;
    RETURN_IF_ERROR(ReadField(*it, "program", t.program));
    RETURN_IF_ERROR(ReadField(*it, "lower", t.lower));
    RETURN_IF_ERROR(ReadField(*it, "upper", t.upper));
    r.transform = std::move(t);
  }
  RETURN_IF_ERROR(r.Validate());
  if (statistic.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "request '", r.id,
        "' needs a statistic (mean, histogram, cdf or quantile)"));
  }
  return r;
}

nlohmann::json ToJson(const VariableSpec& spec) {
  json out = {{"name", spec.name},
              {"kind", std::string(VariableKindName(spec.kind))}};
  switch (spec.kind) {
    case VariableKind::kNumeric:
      out["lower"] = spec.lower;
      out["upper"] = spec.upper;
      break;
    case VariableKind::kCategorical:
      out["categories"] = spec.categories;
      break;
    case VariableKind::kBoolean:
      break;
  }
  if (!spec.description.empty()) out["description"] = spec.description;
  return out;
}

absl::StatusOr<VariableSpec> VariableFromJson(const nlohmann::json& j) {
  RETURN_IF_ERROR(CheckKeys(
      j, {"name", "kind", "lower", "upper", "categories", "description"},
      "variable"));
  VariableSpec spec;
  RETURN_IF_ERROR(ReadField(j, "name", spec.name));
  std::string kind = "numeric";
  RETURN_IF_ERROR(ReadField(j, "kind", kind));
  ASSIGN_OR_RETURN(spec.kind, ParseVariableKind(kind));
  RETURN_IF_ERROR(ReadField(j, "lower", spec.lower));
  RETURN_IF_ERROR(ReadField(j, "upper", spec.upper));
  RETURN_IF_ERROR(ReadField(j, "categories", spec.categories));
  RETURN_IF_ERROR(ReadField(j, "description", spec.description));
  if (spec.kind == VariableKind::kBoolean) {
    spec.lower = 0;
    spec.upper = 1;
  }
  RETURN_IF_ERROR(spec.Validate());
  return spec;
}

}  // namespace dpr
