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

#include <optional>
#include <string>
#include <thread>

#include "absl/strings/str_cat.h"
#include "dpr/service.h"
#include "httplib.h"

namespace dpr {
namespace {

constexpr char kJson[] = "application/json";

void Send(const HttpResponse& response, httplib::Response& res) {
  res.status = response.status;
  res.set_content(response.body.dump() + "\n", kJson);
}

std::optional<std::string> Bearer(const httplib::Request& req) {
  if (!req.has_header("Authorization")) return std::nullopt;
  const std::optional<std::string_view> token =
      BearerToken(req.get_header_value("Authorization"));
  if (!token.has_value()) return std::nullopt;
  return std::string(*token);
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {
    server.Post("/repartition", [](const httplib::Request& req, httplib::Response& res) {
      Send(Service::Repartition(req.body), res);
    });
    server.Post("/release", [this](const httplib::Request& req, httplib::Response& res) {
      Send(service.Release(Bearer(req), req.body), res);
    });
    server.Get(R"(/metadata/public/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Send(service.PublicMetadata(req.matches[1].str()), res);
               });
    server.Get(R"(/metadata/user/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 std::optional<std::string> user;
                 if (req.has_param("user")) user = req.get_param_value("user");
                 Send(service.UserMetadata(Bearer(req), req.matches[1].str(), user), res);
               });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      Send({res.status,
            {{"error", {{"code", "no_route"}, {"message", "no such endpoint"}}}}},
           res);
    });
  }

  absl::StatusOr<int> Bind(const std::string& address, int port) {
    int bound = port;
    if (port == 0) {
      bound = server.bind_to_any_port(address);
    } else if (!server.bind_to_port(address, port)) {
      bound = -1;
    }
    if (bound < 0) {
      return absl::UnavailableError(absl::StrCat("cannot bind ", address, ":", port));
    }
    return bound;
  }

  Service& service;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { Stop(); }

absl::StatusOr<int> HttpServer::Start(const std::string& address, int port) {
  absl::StatusOr<int> bound = impl_->Bind(address, port);
  if (!bound.ok()) return bound;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

absl::Status HttpServer::Run(const std::string& address, int port) {
  absl::StatusOr<int> bound = impl_->Bind(address, port);
  if (!bound.ok()) return bound.status();
  if (!impl_->server.listen_after_bind()) {
    return absl::InternalError("server stopped with an error");
  }
  return absl::OkStatus();
}

void HttpServer::Stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dpr
