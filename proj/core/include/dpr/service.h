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

#ifndef DPR_SERVICE_H_
#define DPR_SERVICE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "dpr/ledger_store.h"
#include "dpr/release_engine.h"
#include "dpr/workspace.h"
#include "nlohmann/json.hpp"

namespace dpr {

// Who is calling, as resolved from a bearer token.
struct Principal {
  Tier tier = Tier::kUntrusted;
  // Required for semi-trusted principals; names the user metadata file.
  std::string user;
  // Datasets this principal may use; empty means all.
  std::set<std::string> datasets;

  bool MayUse(std::string_view dataset) const;
};

// Pluggable bearer-token check.
class Authenticator {
 public:
  virtual ~Authenticator() = default;
  virtual std::optional<Principal> Authenticate(std::string_view token) const = 0;
};

// Fixed token table, e.g. loaded from a JSON file:
//   {"<token>": {"tier": "semi_trusted", "user": "alice",
//                "datasets": ["acs"]}, ...}
class StaticTokenAuthenticator : public Authenticator {
 public:
  explicit StaticTokenAuthenticator(std::map<std::string, Principal> tokens);
  static absl::StatusOr<std::unique_ptr<StaticTokenAuthenticator>> FromJson(
      const nlohmann::json& json);

  std::optional<Principal> Authenticate(std::string_view token) const override;

 private:
  std::map<std::string, Principal, std::less<>> tokens_;
};

struct ServiceConfig {
  std::string listen_address = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "data";
  // JSON token table for StaticTokenAuthenticator; empty admits no one
  // to authenticated endpoints.
  std::string tokens_file;
  OpenOptions dataset_options;
};

// Reads a JSON config file (fields: listen_address, port, data_dir,
// tokens_file, semi_trusted, shared_pool, shared_hourly_epsilon,
// analyst_statistic_capacity) and then applies DPR_LISTEN_ADDRESS,
// DPR_PORT, DPR_DATA_DIR, DPR_TOKENS_FILE, DPR_SEMI_TRUSTED,
// DPR_SHARED_POOL and DPR_SHARED_HOURLY_EPSILON from `getenv`.
// An empty path skips the file.
absl::StatusOr<ServiceConfig> LoadServiceConfig(
    const std::string& path,
    const std::function<const char*(const char*)>& getenv);

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent request handlers. Error bodies are
// {"error": {"code": ..., "message": ...}} with a stable code.
//
// Datasets are opened lazily from the data directory and kept open; each
// dataset's ledger and metadata are written only through its
// ReleaseEngine.
class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<const Authenticator> auth);

  // Pure function of the body: no authentication and no server state.
  static HttpResponse Repartition(std::string_view body);

  HttpResponse Release(std::optional<std::string_view> bearer,
                       std::string_view body);
  HttpResponse PublicMetadata(std::string_view dataset);
  // `user` defaults to the caller's own id.
  HttpResponse UserMetadata(std::optional<std::string_view> bearer,
                            std::string_view dataset,
                            std::optional<std::string_view> user);

  const ServiceConfig& config() const { return config_; }

 private:
  absl::StatusOr<ReleaseEngine*> Engine(const std::string& dataset);

  ServiceConfig config_;
  std::shared_ptr<const Authenticator> auth_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<ReleaseEngine>> engines_;
};

// Token from an Authorization header value of the form "Bearer <token>".
std::optional<std::string_view> BearerToken(std::string_view header);

// Runs a Service over HTTP on a background thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and starts serving; port 0 picks a free port. Returns the port.
  absl::StatusOr<int> Start(const std::string& address, int port);
  // Blocks until Stop is called from another thread.
  absl::Status Run(const std::string& address, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dpr

#endif  // DPR_SERVICE_H_
