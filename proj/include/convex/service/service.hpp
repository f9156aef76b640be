// Copyright 2026 The Convex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "convex/dialogue/dialogue.hpp"
#include "convex/store/store.hpp"

namespace httplib {
class Server;
}

namespace convex::service {

CONVEX_DEFINE_ERROR(BadRequestError, "bad_request");

struct ApiError {
  int status = 500;
  std::string code;
  std::string message;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json body() const;
};

// 4xx for caller faults, 5xx for engine faults, keyed by the error code.
int status_for(const std::string& code);
ApiError to_api_error(const std::exception& e);

struct Bytes {
  std::string media_type;
  std::string body;
};

struct UploadRequest {
  std::string filename;
  std::string bytes;
  std::optional<std::string> sheets;  // "all", "first" or comma-separated names
  std::optional<char> delimiter;
};

// The engine behind the HTTP routes. Every method loads the session from the
// store, runs the engine, persists, and returns the response document.
// Requests for one session are serialized; different sessions run in parallel.
class Api {
 public:
  explicit Api(store::SessionStore& store, dialogue::Assistant bot = dialogue::Assistant());

  // Overrides the timestamp source of new sessions (tests).
  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json list_sessions();
  nlohmann::json get_session(const std::string& id);
  nlohmann::json upload(const std::string& id, const UploadRequest& request);
  nlohmann::json message(const std::string& id, const nlohmann::json& request);
  nlohmann::json feedback(const std::string& id, const nlohmann::json& request);
  nlohmann::json pause(const std::string& id);
  nlohmann::json resume(const std::string& id);
  nlohmann::json survey(const std::string& id, const nlohmann::json& request);
  Bytes artifact(const std::string& id, const std::string& artifact_id);
  // Generates the story when the session can still end.
  nlohmann::json story(const std::string& id);
  nlohmann::json metrics();

  store::SessionStore& store() { return store_; }

 private:
  std::shared_ptr<std::mutex> session_lock(const std::string& id);
  executor::Session load(const std::string& id);
  dialogue::UserProfile load_profile(const std::string& user_id);
  void persist(const executor::Session& s, const dialogue::UserProfile& profile);
  nlohmann::json transcript(const executor::Session& s) const;

  store::SessionStore& store_;
  dialogue::Assistant bot_;
  std::function<std::string()> clock_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::mutex profile_mutex_;
};

nlohmann::json turn_json(const executor::Session& s, const executor::Turn& t);
nlohmann::json artifact_json(const executor::Session& s, const executor::Artifact& a);

// Registers every route on `server`.
void mount(httplib::Server& server, Api& api);

struct ServeOptions {
  std::string bind = "127.0.0.1";
  int port = 8080;
};

// Blocks until the server stops. Throws IoError when the address cannot be
// bound; `on_ready` receives the bound port.
void serve(Api& api, const ServeOptions& options, std::function<void(int)> on_ready = {});

}  // namespace convex::service
