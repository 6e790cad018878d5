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

// dpr: command-line driver for ingesting, budgeting, releasing, serving
// and the evaluation experiments. Exit codes: 0 ok, 1 user error,
// 2 internal error.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpr/dataset.h"
#include "dpr/evaluation.h"
#include "dpr/plan.h"
#include "dpr/release_engine.h"
#include "dpr/service.h"
#include "dpr/workspace.h"
#include "nlohmann/json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

int Fail(const absl::Status& status) {
  std::cerr << "dpr: " << status.message() << "\n";
  switch (status.code()) {
    case absl::StatusCode::kInternal:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kUnknown:
      return kInternalError;
    default:
      return kUserError;
  }
}

absl::StatusOr<json> ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return absl::InvalidArgumentError(path + " is not valid JSON");
  return j;
}

absl::Status Emit(const json& document, const std::string& output) {
  const std::string text = document.dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
    return absl::OkStatus();
  }
  std::ofstream out(output, std::ios::trunc);
  out << text;
  if (!out) return absl::InternalError("cannot write " + output);
  return absl::OkStatus();
}

std::string Num(double x) { return absl::StrFormat("%.10g", x); }

struct IngestArgs {
  std::string csv, schema, data_dir = "data";
  double epsilon = 0, delta = 0;
  std::optional<double> population, depositor_epsilon;
  bool force = false;
};

int RunIngest(const IngestArgs& a) {
  absl::StatusOr<dpr::Schema> schema = dpr::LoadSchema(a.schema);
  if (!schema.ok()) return Fail(schema.status());
  dpr::DatasetSettings settings;
  settings.global = {a.epsilon, a.delta};
  if (a.population.has_value()) {
    settings.sample.secret = true;
    settings.sample.m = *a.population;
  }
  settings.depositor_epsilon = a.depositor_epsilon;
  absl::StatusOr<int64_t> n =
      dpr::RegisterDataset(a.data_dir, a.csv, *schema, settings, a.force);
  if (!n.ok()) return Fail(n.status());
  absl::StatusOr<dpr::GlobalBudget> budget = dpr::BudgetFor(settings, *n);
  if (!budget.ok()) return Fail(budget.status());
  std::cout << "registered " << schema->dataset_id << ": n=" << *n << "\n"
            << "depositor budget: epsilon=" << Num(budget->depositor.epsilon)
            << " delta=" << Num(budget->depositor.delta) << "\n"
            << "analyst budget: epsilon=" << Num(budget->analyst.epsilon)
            << " delta=" << Num(budget->analyst.delta) << "\n";
  return kOk;
}

struct BudgetArgs {
  std::string input, output;
  std::optional<double> epsilon, delta, population, depositor_epsilon;
  std::optional<int64_t> n;
};

int RunBudget(const BudgetArgs& a) {
  absl::StatusOr<json> body = ReadJsonFile(a.input);
  if (!body.ok()) return Fail(body.status());
  absl::StatusOr<dpr::PlanInput> input = dpr::PlanInputFromJson(*body);
  if (!input.ok()) return Fail(input.status());
  if (a.epsilon.has_value()) input->global.epsilon = *a.epsilon;
  if (a.delta.has_value()) input->global.delta = *a.delta;
  if (a.n.has_value()) input->n = *a.n;
  if (a.population.has_value()) {
    input->sample.secret = true;
    input->sample.m = *a.population;
  }
  if (a.depositor_epsilon.has_value()) input->depositor_epsilon = a.depositor_epsilon;
  absl::StatusOr<dpr::PlanOutput> plan = dpr::ComputePlan(*input);
  if (!plan.ok()) return Fail(plan.status());
  for (const std::string& w : plan->warnings) std::cerr << "warning: " << w << "\n";
  const absl::Status emitted = Emit(dpr::ToJson(*plan), a.output);
  return emitted.ok() ? kOk : Fail(emitted);
}

struct ReleaseArgs {
  std::string data_dir = "data", dataset, plan, tier = "depositor", user, output;
  bool test_mode = false;
  std::optional<uint64_t> seed;
};

int RunRelease(const ReleaseArgs& a) {
  if (a.seed.has_value() && !a.test_mode) {
    return Fail(absl::InvalidArgumentError("--seed is only honored with --test-mode"));
  }
  absl::StatusOr<dpr::Tier> tier = dpr::ParseTier(a.tier);
  if (!tier.ok()) return Fail(tier.status());
  absl::StatusOr<json> plan = ReadJsonFile(a.plan);
  if (!plan.ok()) return Fail(plan.status());
  absl::StatusOr<dpr::ReleaseBatch> batch = dpr::BatchFromPlanJson(*plan);
  if (!batch.ok()) return Fail(batch.status());
  dpr::OpenOptions options;
  if (a.test_mode) options.seed = a.seed.value_or(0);
  absl::StatusOr<std::unique_ptr<dpr::ReleaseEngine>> engine =
      dpr::OpenDataset(a.data_dir, a.dataset, options);
  if (!engine.ok()) return Fail(engine.status());
  absl::StatusOr<dpr::ExecuteResult> result = (*engine)->Execute(*tier, a.user, *batch);
  if (!result.ok()) return Fail(result.status());
  for (const std::string& w : result->warnings) std::cerr << "warning: " << w << "\n";
  if (!result->accepted) {
    std::cerr << "dpr: release rejected: " << result->reason
              << " (remaining epsilon=" << Num(result->remaining.epsilon)
              << " delta=" << Num(result->remaining.delta) << ")\n";
    return kUserError;
  }
  json releases = json::array();
  for (const dpr::ReleaseRecord& r : result->records) releases.push_back(dpr::ToJson(r));
  const json out = {
      {"batch_id", result->batch_id},
      {"cost", {{"epsilon", result->cost.epsilon}, {"delta", result->cost.delta}}},
      {"remaining",
       {{"epsilon", result->remaining.epsilon}, {"delta", result->remaining.delta}}},
      {"releases", std::move(releases)}};
  const absl::Status emitted = Emit(out, a.output);
  return emitted.ok() ? kOk : Fail(emitted);
}

struct CombinedArgs {
  std::string out_dir = ".";
  int64_t n = 100000;
  int variables = 50;
  int seeds = 5;
  uint64_t first_seed = 1;
  double epsilon = 0.3;
  double delta = std::ldexp(1.0, -20);
};

int RunCombined(const CombinedArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  std::ofstream errors(fs::path(a.out_dir) / "combined_errors.csv");
  std::ofstream summary(fs::path(a.out_dir) / "combined_summary.csv");
  if (!errors || !summary) return Fail(absl::InvalidArgumentError("cannot write to " + a.out_dir));
  errors << "seed,request_id,variable,statistic,epsilon,accuracy,normalized_error\n";
  summary << "seed,mean_normalized_error,means,histograms,cdfs,composed_epsilon,"
             "basic_epsilon\n";
  double total = 0;
  for (int s = 0; s < a.seeds; ++s) {
    dpr::CombinedReleaseConfig config;
    config.n = a.n;
    config.variables = a.variables;
    config.global = {a.epsilon, a.delta};
    config.seed = a.first_seed + s;
    absl::StatusOr<dpr::CombinedReleaseResult> r = dpr::RunCombinedRelease(config);
    if (!r.ok()) return Fail(r.status());
    for (const dpr::StatisticError& e : r->errors) {
      errors << config.seed << "," << e.request_id << "," << e.variable << ","
             << dpr::StatisticKindName(e.kind) << "," << Num(e.epsilon) << ","
             << Num(e.accuracy) << "," << Num(e.normalized_error) << "\n";
    }
    summary << config.seed << "," << Num(r->mean_normalized_error) << ","
            << Num(r->mean_error_means) << "," << Num(r->mean_error_histograms) << ","
            << Num(r->mean_error_cdfs) << "," << Num(r->composed_epsilon) << ","
            << Num(r->basic_epsilon) << "\n";
    std::cout << "seed " << config.seed << ": normalized MAE "
              << Num(r->mean_normalized_error) << " (plan "
              << absl::StrFormat("%.2f", r->plan_seconds) << " s, release "
              << absl::StrFormat("%.2f", r->release_seconds) << " s)\n";
    total += r->mean_normalized_error;
  }
  if (a.seeds > 0) std::cout << "average normalized MAE " << Num(total / a.seeds) << "\n";
  return kOk;
}

struct TrendArgs {
  std::string out_dir = ".";
  int seeds = 1;
  uint64_t first_seed = 1;
  double epsilon = 0.01;
};

int RunTrend(const TrendArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  std::ofstream points(fs::path(a.out_dir) / "trend_points.csv");
  std::ofstream fits(fs::path(a.out_dir) / "trend_fits.csv");
  if (!points || !fits) return Fail(absl::InvalidArgumentError("cannot write to " + a.out_dir));
  points << "seed,time,n,true_mean,dp_mean\n";
  fits << "seed,true_slope,true_intercept,dp_slope,dp_intercept,relative_slope_error\n";
  for (int s = 0; s < a.seeds; ++s) {
    dpr::TrendConfig config;
    config.epsilon = a.epsilon;
    config.seed = a.first_seed + s;
    absl::StatusOr<dpr::TrendResult> r = dpr::RunTrendExperiment(config);
    if (!r.ok()) return Fail(r.status());
    for (size_t i = 0; i < r->times.size(); ++i) {
      points << config.seed << "," << Num(r->times[i]) << "," << r->sample_sizes[i] << ","
             << Num(r->true_means[i]) << "," << Num(r->dp_means[i]) << "\n";
    }
    const double rel = std::abs(r->dp_slope - r->true_slope) / std::abs(r->true_slope);
    fits << config.seed << "," << Num(r->true_slope) << "," << Num(r->true_intercept) << ","
         << Num(r->dp_slope) << "," << Num(r->dp_intercept) << "," << Num(rel) << "\n";
    std::cout << "seed " << config.seed << ": true slope " << Num(r->true_slope)
              << ", dp slope " << Num(r->dp_slope) << "\n";
  }
  return kOk;
}

struct ServeArgs {
  std::string config;
  std::optional<std::string> data_dir, listen_address, tokens_file;
  std::optional<int> port;
};

int RunServe(const ServeArgs& a) {
  absl::StatusOr<dpr::ServiceConfig> config = dpr::LoadServiceConfig(a.config, std::getenv);
  if (!config.ok()) return Fail(config.status());
  if (a.data_dir) config->data_dir = *a.data_dir;
  if (a.listen_address) config->listen_address = *a.listen_address;
  if (a.tokens_file) config->tokens_file = *a.tokens_file;
  if (a.port) config->port = *a.port;
  std::shared_ptr<const dpr::Authenticator> auth;
  if (!config->tokens_file.empty()) {
    absl::StatusOr<json> tokens = ReadJsonFile(config->tokens_file);
    if (!tokens.ok()) return Fail(tokens.status());
    absl::StatusOr<std::unique_ptr<dpr::StaticTokenAuthenticator>> table =
        dpr::StaticTokenAuthenticator::FromJson(*tokens);
    if (!table.ok()) return Fail(table.status());
    auth = *std::move(table);
  }
  dpr::Service service(*config, auth);
  dpr::HttpServer server(service);
  std::cerr << "dpr: serving " << config->data_dir << " on " << config->listen_address
            << ":" << config->port << "\n";
  const absl::Status status = server.Run(config->listen_address, config->port);
  return status.ok() ? kOk : Fail(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private statistics release"};
  app.require_subcommand(1);

  IngestArgs ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "Register a CSV dataset");
  ingest_cmd->add_option("--csv", ingest.csv, "CSV file with a header row")->required();
  ingest_cmd->add_option("--schema", ingest.schema, "Schema JSON")->required();
  ingest_cmd->add_option("--data-dir", ingest.data_dir, "Data directory")->capture_default_str();
  ingest_cmd->add_option("--epsilon", ingest.epsilon, "Global epsilon")->required();
  ingest_cmd->add_option("--delta", ingest.delta, "Global delta")->required();
  ingest_cmd->add_option("--population", ingest.population,
                         "Population size when the sample is secret");
  ingest_cmd->add_option("--depositor-epsilon", ingest.depositor_epsilon,
                         "Depositor share of the effective epsilon");
  ingest_cmd->add_flag("--force", ingest.force, "Replace an existing registration");

  BudgetArgs budget;
  CLI::App* budget_cmd = app.add_subcommand("budget", "Repartition a request list");
  budget_cmd->add_option("--input", budget.input,
                         "JSON with global, n, variables, requests, sample")
      ->required();
  budget_cmd->add_option("--epsilon", budget.epsilon, "Override the global epsilon");
  budget_cmd->add_option("--delta", budget.delta, "Override the global delta");
  budget_cmd->add_option("--n", budget.n, "Override the dataset size");
  budget_cmd->add_option("--population", budget.population,
                         "Population size when the sample is secret");
  budget_cmd->add_option("--depositor-epsilon", budget.depositor_epsilon,
                         "Depositor share of the effective epsilon");
  budget_cmd->add_option("--output", budget.output, "Write the plan here instead of stdout");

  ReleaseArgs release;
  CLI::App* release_cmd = app.add_subcommand("release", "Execute a plan or batch");
  release_cmd->add_option("--data-dir", release.data_dir, "Data directory")->capture_default_str();
  release_cmd->add_option("--dataset", release.dataset, "Dataset id")->required();
  release_cmd->add_option("--plan", release.plan, "Output of `dpr budget`, or a batch")
      ->required();
  release_cmd->add_option("--tier", release.tier, "depositor, semi_trusted or untrusted")
      ->capture_default_str();
  release_cmd->add_option("--user", release.user, "User id for analyst tiers");
  release_cmd->add_option("--output", release.output, "Write the result here");
  release_cmd->add_flag("--test-mode", release.test_mode, "Deterministic noise");
  release_cmd->add_option("--seed", release.seed, "Noise seed; needs --test-mode");

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Run an evaluation experiment");
  evaluate_cmd->require_subcommand(1);
  CombinedArgs combined;
  CLI::App* combined_cmd =
      evaluate_cmd->add_subcommand("combined", "Mean, histogram and CDF per variable");
  combined_cmd->add_option("--out-dir", combined.out_dir, "Output directory")
      ->capture_default_str();
  combined_cmd->add_option("--n", combined.n, "Rows")->capture_default_str();
  combined_cmd->add_option("--variables", combined.variables, "Variables")
      ->capture_default_str();
  combined_cmd->add_option("--seeds", combined.seeds, "Number of seeds")->capture_default_str();
  combined_cmd->add_option("--first-seed", combined.first_seed, "First seed")
      ->capture_default_str();
  combined_cmd->add_option("--epsilon", combined.epsilon, "Global epsilon")
      ->capture_default_str();
  combined_cmd->add_option("--delta", combined.delta, "Global delta")->capture_default_str();
  TrendArgs trend;
  CLI::App* trend_cmd =
      evaluate_cmd->add_subcommand("trend", "DP means over a series of surveys");
  trend_cmd->add_option("--out-dir", trend.out_dir, "Output directory")->capture_default_str();
  trend_cmd->add_option("--seeds", trend.seeds, "Number of seeds")->capture_default_str();
  trend_cmd->add_option("--first-seed", trend.first_seed, "First seed")->capture_default_str();
  trend_cmd->add_option("--epsilon", trend.epsilon, "Epsilon per survey")
      ->capture_default_str();

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", serve.config, "JSON config file");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Data directory");
  serve_cmd->add_option("--listen-address", serve.listen_address, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Port");
  serve_cmd->add_option("--tokens-file", serve.tokens_file, "Bearer token table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (*ingest_cmd) return RunIngest(ingest);
    if (*budget_cmd) return RunBudget(budget);
    if (*release_cmd) return RunRelease(release);
    if (*combined_cmd) return RunCombined(combined);
    if (*trend_cmd) return RunTrend(trend);
    if (*serve_cmd) return RunServe(serve);
  } catch (const std::exception& e) {
    std::cerr << "dpr: internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kUserError;
}
