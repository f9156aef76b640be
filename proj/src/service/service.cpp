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

#include "convex/service/service.hpp"

#include <httplib.h>

#include "convex/common/files.hpp"
#include "convex/executor/executor.hpp"
#include "convex/metrics/metrics.hpp"
#include "convex/intent/parser.hpp"
#include "convex/storyteller/story.hpp"
#include "convex/tabular/ingest.hpp"

namespace convex::service {

using nlohmann::json;
using executor::Session;

nlohmann::json ApiError::body() const {
  json err = {{"status", status}, {"code", code}, {"message", message}};
  for (const auto& [k, v] : extra.items()) err[k] = v;
  return {{"error", err}};
}

int status_for(const std::string& code) {
  static const std::map<std::string, int> table = {
      {"bad_request", 400},
      {"not_found", 404},
      {"unknown_artifact", 404},
      {"no_such_turn", 404},
      {"session_state", 409},
      {"upload_conflict", 409},
      {"wrong_state", 409},
      {"empty_session", 409},
      {"empty_message", 422},
      {"unsupported_format", 422},
      {"malformed_bundle", 422},
      {"zip_error", 422},
      {"csv_syntax_error", 422},
      {"ragged_row", 422},
      {"header_error", 422},
      {"table_schema_violation", 422},
      {"no_numeric_columns", 422},
      {"unknown_sheet", 422},
      {"not_a_bot_turn", 422},
      {"invalid_rating", 422},
      {"type_mismatch", 422},
      {"unknown_attribute", 422},
      {"unknown_plot_kind", 422},
      {"invalid_param", 422},
  };
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

ApiError to_api_error(const std::exception& e) {
  ApiError err;
  if (const auto* ce = dynamic_cast<const Error*>(&e)) {
    err.code = ce->code();
  } else if (dynamic_cast<const json::exception*>(&e)) {
    err.code = "bad_request";
  } else {
    err.code = "internal";
  }
  err.status = status_for(err.code);
  err.message = e.what();
  if (const auto* uf = dynamic_cast<const tabular::UnsupportedFormatError*>(&e)) {
    err.extra["remedy"] = uf->remedy();
  }
  if (err.code == "session_state") err.extra["hint"] = "POST /sessions/{id}/resume";
  if (const auto* ce = dynamic_cast<const store::CorruptError*>(&e)) {
    err.extra["file"] = ce->file();
    err.extra["field"] = ce->field();
  }
  return err;
}

json artifact_json(const Session& s, const executor::Artifact& a) {
  return {{"id", a.id},
          {"kind", executor::to_string(a.kind)},
          {"title", a.title},
          {"explanation", a.explanation},
          {"media_type", executor::media_type(a.kind)},
          {"sha256", a.sha256},
          {"node_id", a.node_id},
          {"visible", a.visible},
          {"url", "/sessions/" + s.id + "/artifacts/" + a.id},
          {"meta", a.meta}};
}

json turn_json(const Session& s, const executor::Turn& t) {
  json j = executor::to_json(t);
  json details = json::array();
  for (const auto& id : t.artifacts) {
    if (const auto* a = s.artifact(id)) details.push_back(artifact_json(s, *a));
  }
  j["artifact_details"] = details;
  return j;
}

Api::Api(store::SessionStore& store, dialogue::Assistant bot)
    : store_(store), bot_(std::move(bot)) {}

std::shared_ptr<std::mutex> Api::session_lock(const std::string& id) {
  std::lock_guard<std::mutex> g(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

Session Api::load(const std::string& id) {
  Session s = store_.load(id);
  if (clock_) s.clock = clock_;
  return s;
}

dialogue::UserProfile Api::load_profile(const std::string& user_id) {
  return store_.load_profile(user_id);
}

void Api::persist(const Session& s, const dialogue::UserProfile& profile) {
  store_.save(s);
  store_.save_profile(profile);
}

json Api::transcript(const Session& s) const {
  json turns = json::array();
  for (const auto& t : s.turns) turns.push_back(turn_json(s, t));
  json artifacts = json::array();
  for (const auto& a : s.artifacts) artifacts.push_back(artifact_json(s, a));
  json j = {{"schema_version", 1},
            {"session_id", s.id},
            {"user_id", s.user_id},
            {"status", executor::to_string(s.status)},
            {"seed", s.seed},
            {"turns", turns},
            {"artifacts", artifacts},
            {"warnings", s.warnings},
            {"story_artifact", s.story_artifact ? json(*s.story_artifact) : json(nullptr)}};
  j["pending"] = s.pending ? json{{"node_id", s.pending->node_id},
                                  {"key", s.pending->key},
                                  {"blocking", s.pending->blocking}}
                           : json(nullptr);
  j["suggestion"] = s.suggestion ? json{{"action", intent::to_string(s.suggestion->action)},
                                        {"rationale", s.suggestion->rationale},
                                        {"score", s.suggestion->score}}
                                 : json(nullptr);
  j["dataset"] = s.dataset ? json{{"filename", s.dataset->filename},
                                  {"format", s.dataset->format},
                                  {"sheet_names", s.dataset->sheet_names}}
                           : json(nullptr);
  return j;
}

namespace {

std::string required_string(const json& body, const char* field) {
  if (!body.is_object() || !body.contains(field) || !body[field].is_string()) {
    throw BadRequestError(std::string("field '") + field + "' must be a string");
  }
  return body[field].get<std::string>();
}

json reply_json(const Session& s, const std::vector<executor::Turn>& turns) {
  json out = json::array();
  for (const auto& t : turns) out.push_back(turn_json(s, t));
  return {{"session_id", s.id}, {"status", executor::to_string(s.status)}, {"turns", out}};
}

}  // namespace

json Api::create_session(const json& request) {
  uint64_t seed = 42;
  std::string user = "default";
  if (request.is_object()) {
    if (request.contains("seed")) {
      if (!request["seed"].is_number_unsigned()) throw BadRequestError("seed must be a non-negative integer");
      seed = request["seed"].get<uint64_t>();
    }
    if (request.contains("user_id")) user = required_string(request, "user_id");
  }
  Session s = bot_.open_session(store::SessionStore::new_session_id(), seed, user);
  if (clock_) s.clock = clock_;
  store_.save(s);
  return {{"session_id", s.id}, {"status", executor::to_string(s.status)}};
}

json Api::list_sessions() {
  json out = json::array();
  for (const auto& id : store_.list()) out.push_back(id);
  return {{"sessions", out}};
}

json Api::get_session(const std::string& id) {
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  return transcript(load(id));
}

json Api::upload(const std::string& id, const UploadRequest& request) {
  if (request.filename.empty()) throw BadRequestError("a filename is required");
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  Session s = load(id);
  std::lock_guard<std::mutex> p(profile_mutex_);
  auto profile = load_profile(s.user_id);
  std::optional<tabular::SheetSelection> selection;
  if (request.sheets) selection = tabular::SheetSelection::parse(*request.sheets);
  auto outcome = bot_.upload(s, request.filename, request.bytes, selection, profile,
                             store_.history(), request.delimiter);
  persist(s, profile);
  json out = reply_json(s, outcome.turns);
  out["report"] = outcome.report;
  return out;
}

json Api::message(const std::string& id, const json& request) {
  const std::string text = required_string(request, "text");
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  Session s = load(id);
  std::lock_guard<std::mutex> p(profile_mutex_);
  auto profile = load_profile(s.user_id);
  auto turns = bot_.handle_turn(s, text, profile, store_.history());
  persist(s, profile);
  return reply_json(s, turns);
}

json Api::feedback(const std::string& id, const json& request) {
  if (!request.is_object() || !request.contains("turn_index") ||
      !request["turn_index"].is_number_unsigned()) {
    throw BadRequestError("field 'turn_index' must be a non-negative integer");
  }
  const auto rating = intent::rating_from_string(required_string(request, "rating"));
  if (!rating) throw BadRequestError("rating must be 'like' or 'dislike'");
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  Session s = load(id);
  std::lock_guard<std::mutex> p(profile_mutex_);
  auto profile = load_profile(s.user_id);
  const size_t index = request["turn_index"].get<size_t>();
  bot_.record_feedback(s, index, *rating, profile);
  persist(s, profile);
  return {{"session_id", s.id}, {"turn", turn_json(s, s.turns.at(index))}, {"warnings", s.warnings}};
}

json Api::pause(const std::string& id) {
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  Session s = load(id);
  executor::pause(s);
  store_.save(s);
  return {{"session_id", s.id},
          {"status", executor::to_string(s.status)},
          {"snapshot", "sessions/" + s.id + "/snapshot.json"}};
}

json Api::resume(const std::string& id) {
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  if (load(id).status != executor::SessionStatus::Paused) {
    throw executor::SessionStateError("session " + id + " is not paused");
  }
  Session s = store_.resume(id);
  store_.save(s);
  return {{"session_id", s.id}, {"status", executor::to_string(s.status)}};
}

json Api::survey(const std::string& id, const json& request) {
  if (!request.is_object()) throw BadRequestError("expected a JSON object");
  auto answers = metrics::survey_from_json(request);
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  store_.save_survey(id, answers);
  json out = metrics::to_json(answers);
  out["session_id"] = id;
  return out;
}

Bytes Api::artifact(const std::string& id, const std::string& artifact_id) {
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  Session s = load(id);
  const auto& a = s.require_artifact(artifact_id);
  return {std::string(executor::media_type(a.kind)), s.payload(a)};
}

json Api::story(const std::string& id) {
  auto lock = session_lock(id);
  std::lock_guard<std::mutex> g(*lock);
  Session s = load(id);
  if (!s.story_artifact) {
    if (s.status == executor::SessionStatus::Paused) {
      throw executor::SessionStateError("session " + id + " is paused; resume it before ending");
    }
    std::lock_guard<std::mutex> p(profile_mutex_);
    auto profile = load_profile(s.user_id);
    bot_.end_session(s, profile);
    persist(s, profile);
  }
  const auto& a = s.require_artifact(*s.story_artifact);
  return {{"session_id", s.id},
          {"artifact_id", a.id},
          {"title", a.title},
          {"sections", a.meta.value("sections", json::array())},
          {"media_type", executor::media_type(a.kind)},
          {"url", "/sessions/" + s.id + "/artifacts/" + a.id},
          {"markdown", s.payload(a)}};
}

json Api::metrics() {
  return metrics::to_json(
      metrics::aggregate(store_.load_all(), store_.surveys(), bot_.resources()));
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw BadRequestError("request body is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const std::exception& e) {
      const auto err = to_api_error(e);
      send_json(res, err.status, err.body());
    }
  };
}

std::optional<std::string> field(const httplib::Request& req, const std::string& name) {
  if (req.is_multipart_form_data() && req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_param(name)) return req.get_param_value(name);
  return std::nullopt;
}

}  // namespace

void mount(httplib::Server& srv, Api& api) {
  srv.Post("/sessions", guarded([&api](const auto& req, auto& res) {
             send_json(res, 201, api.create_session(body_of(req)));
           }));
  srv.Get("/sessions", guarded([&api](const auto&, auto& res) {
            send_json(res, 200, api.list_sessions());
          }));
  srv.Get(R"(/sessions/([^/]+))", guarded([&api](const auto& req, auto& res) {
            send_json(res, 200, api.get_session(req.matches[1]));
          }));
  srv.Post(R"(/sessions/([^/]+)/dataset)", guarded([&api](const auto& req, auto& res) {
             UploadRequest up;
             if (req.is_multipart_form_data()) {
               if (!req.has_file("file")) throw BadRequestError("multipart upload needs a 'file' part");
               const auto file = req.get_file_value("file");
               up.filename = file.filename;
               up.bytes = file.content;
             } else {
               up.filename = req.get_param_value("filename");
               up.bytes = req.body;
             }
             up.sheets = field(req, "sheets");
             if (auto d = field(req, "delimiter")) {
               if (d->size() != 1) throw BadRequestError("delimiter must be one character");
               up.delimiter = (*d)[0];
             }
             send_json(res, 200, api.upload(req.matches[1], up));
           }));
  srv.Post(R"(/sessions/([^/]+)/messages)", guarded([&api](const auto& req, auto& res) {
             send_json(res, 200, api.message(req.matches[1], body_of(req)));
           }));
  srv.Post(R"(/sessions/([^/]+)/feedback)", guarded([&api](const auto& req, auto& res) {
             send_json(res, 200, api.feedback(req.matches[1], body_of(req)));
           }));
  srv.Post(R"(/sessions/([^/]+)/pause)", guarded([&api](const auto& req, auto& res) {
             send_json(res, 200, api.pause(req.matches[1]));
           }));
  srv.Post(R"(/sessions/([^/]+)/resume)", guarded([&api](const auto& req, auto& res) {
             send_json(res, 200, api.resume(req.matches[1]));
           }));
  srv.Post(R"(/sessions/([^/]+)/survey)", guarded([&api](const auto& req, auto& res) {
             send_json(res, 200, api.survey(req.matches[1], body_of(req)));
           }));
  srv.Get(R"(/sessions/([^/]+)/artifacts/([^/]+))", guarded([&api](const auto& req, auto& res) {
            auto bytes = api.artifact(req.matches[1], req.matches[2]);
            res.status = 200;
            res.set_content(bytes.body, bytes.media_type);
          }));
  srv.Get(R"(/sessions/([^/]+)/story)", guarded([&api](const auto& req, auto& res) {
            send_json(res, 200, api.story(req.matches[1]));
          }));
  srv.Get("/metrics", guarded([&api](const auto&, auto& res) {
            send_json(res, 200, api.metrics());
          }));
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    ApiError err;
    err.status = res.status;
    err.code = res.status == 404 ? "not_found" : "http_" + std::to_string(res.status);
    err.message = "no route for " + req.method + " " + req.path;
    send_json(res, res.status, err.body());
  });
}

void serve(Api& api, const ServeOptions& options, std::function<void(int)> on_ready) {
  httplib::Server srv;
  // Without SO_REUSEPORT a second server on the same port fails to bind.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  mount(srv, api);
  int port = options.port;
  if (port == 0) {
    port = srv.bind_to_any_port(options.bind);
    if (port < 0) throw IoError("cannot bind " + options.bind);
  } else if (!srv.bind_to_port(options.bind, port)) {
    throw IoError("cannot listen on " + options.bind + ":" + std::to_string(port) +
                  " (is the port already in use?)");
  }
  if (on_ready) on_ready(port);
  srv.listen_after_bind();
}

}  // namespace convex::service
