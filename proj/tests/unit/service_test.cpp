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

#include "doctest.h"

#include <httplib.h>

#include <filesystem>
#include <thread>

#include "convex/common/files.hpp"
#include "convex/service/service.hpp"
#include "convex/tabular/zip.hpp"
#include "support/conversation.hpp"

using namespace convex;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kStamp = "2026-01-01T00:00:00Z";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("convex_service_" + store::SessionStore::new_session_id());
  }
  ~TempDir() { fs::remove_all(path); }
};

// A live server on an ephemeral port.
struct Harness {
  TempDir dir;
  store::SessionStore store{dir.path.string()};
  service::Api api{store};
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;

  Harness() {
    api.set_clock([] { return kStamp; });
    service::mount(server, api);
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(60, 0);
  }
  ~Harness() {
    server.stop();
    thread.join();
  }

  std::pair<int, json> post(const std::string& path, const json& body = json::object()) {
    auto res = client->Post(path, body.dump(), "application/json");
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client->Get(path);
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> upload(const std::string& id, const std::string& filename,
                              const std::string& bytes) {
    auto res = client->Post(("/sessions/" + id + "/dataset?filename=" + filename), bytes,
                            "application/octet-stream");
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
  std::string create() {
    auto [status, body] = post("/sessions", {{"seed", 42}});
    REQUIRE(status == 201);
    return body["session_id"].get<std::string>();
  }
  void say(const std::string& id, const std::string& text) {
    auto [status, body] = post("/sessions/" + id + "/messages", {{"text", text}});
    REQUIRE_MESSAGE(status == 200, body.dump());
  }
};

std::string fixture() { return read_file(testing::fixture_path("gender_norms.csv")); }

std::string error_code(const json& body) { return body["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("status mapping") {
  CHECK(service::status_for("not_found") == 404);
  CHECK(service::status_for("session_state") == 409);
  CHECK(service::status_for("empty_message") == 422);
  CHECK(service::status_for("bad_request") == 400);
  CHECK(service::status_for("kmeans") == 500);
  auto err = service::to_api_error(std::runtime_error("boom"));
  CHECK(err.status == 500);
  CHECK(err.body()["error"]["message"] == "boom");
}

TEST_CASE("session lifecycle over http") {
  Harness h;
  const std::string id = h.create();

  auto [ls, list] = h.get("/sessions");
  CHECK(ls == 200);
  CHECK(list["sessions"] == json::array({id}));

  auto [ts, transcript] = h.get("/sessions/" + id);
  CHECK(ts == 200);
  CHECK(transcript["status"] == "active");
  CHECK(transcript["turns"].empty());

  auto [ms, reply] = h.post("/sessions/" + id + "/messages", {{"text", "Help me to analyse my data"}});
  CHECK(ms == 200);
  REQUIRE(!reply["turns"].empty());
  CHECK(reply["turns"][0]["speaker"] == "bot");
  bool asked_for_upload = false;
  for (const auto& t : reply["turns"]) {
    asked_for_upload |= t["text"].get<std::string>().find("Please upload your data collection.") != std::string::npos;
  }
  CHECK(asked_for_upload);

  auto [us, up] = h.upload(id, "gender_norms.csv", fixture());
  CHECK(us == 200);
  CHECK(up["report"]["sheets_transformed"].size() == 1);

  h.say(id, "Give me a statistical description");
  auto [cs, corr] = h.post("/sessions/" + id + "/messages",
                           {{"text", "Analyse the linear correlation between each couple of "
                                     "numerical attributes in the dataset"}});
  CHECK(cs == 200);
  std::string svg_url;
  int plot_turn = -1;
  for (const auto& t : corr["turns"]) {
    for (const auto& a : t["artifact_details"]) {
      if (a["kind"] == "PlotSvg") {
        svg_url = a["url"];
        plot_turn = t["index"];
      }
    }
  }
  REQUIRE(!svg_url.empty());
  auto svg = h.client->Get(svg_url);
  REQUIRE(svg);
  CHECK(svg->status == 200);
  CHECK(svg->get_header_value("Content-Type").find("image/svg+xml") == 0);
  CHECK(svg->body.find("<svg") != std::string::npos);

  SUBCASE("feedback") {
    auto [fs_, fb] = h.post("/sessions/" + id + "/feedback",
                            {{"turn_index", plot_turn}, {"rating", "like"}});
    CHECK(fs_ == 200);
    CHECK(fb["turn"]["feedback"] == "like");
    auto [bs, bad] = h.post("/sessions/" + id + "/feedback", {{"turn_index", 0}, {"rating", "like"}});
    CHECK(bs == 422);
    CHECK(error_code(bad) == "not_a_bot_turn");
    auto [ns, none] = h.post("/sessions/" + id + "/feedback", {{"turn_index", 999}, {"rating", "like"}});
    CHECK(ns == 404);
    CHECK(error_code(none) == "no_such_turn");
    auto [rs, meh] = h.post("/sessions/" + id + "/feedback",
                            {{"turn_index", plot_turn}, {"rating", "meh"}});
    CHECK(rs == 400);
    CHECK(error_code(meh) == "bad_request");
  }

  SUBCASE("pause and resume") {
    auto [ps, paused] = h.post("/sessions/" + id + "/pause");
    CHECK(ps == 200);
    CHECK(paused["status"] == "paused");
    CHECK(fs::exists(h.dir.path / "sessions" / id / "snapshot.json"));
    auto [rs, refused] = h.post("/sessions/" + id + "/messages", {{"text", "hello"}});
    CHECK(rs == 409);
    CHECK(error_code(refused) == "session_state");
    CHECK(refused["error"]["hint"] == "POST /sessions/{id}/resume");
    auto [ss, story_refused] = h.get("/sessions/" + id + "/story");
    CHECK(ss == 409);
    auto [rr, resumed] = h.post("/sessions/" + id + "/resume");
    CHECK(rr == 200);
    CHECK(resumed["status"] == "active");
    auto [again, twice] = h.post("/sessions/" + id + "/resume");
    CHECK(again == 409);
    h.say(id, "Ok.");
  }

  SUBCASE("story, survey and metrics") {
    auto [ss, story] = h.get("/sessions/" + id + "/story");
    CHECK(ss == 200);
    CHECK(story["markdown"].get<std::string>().find("# ") == 0);
    CHECK(!story["sections"].empty());
    for (const auto& sec : story["sections"]) CHECK(sec.contains("artifact_ids"));
    auto [again, same] = h.get("/sessions/" + id + "/story");
    CHECK(same["artifact_id"] == story["artifact_id"]);
    auto [ts2, done] = h.get("/sessions/" + id);
    CHECK(done["status"] == "completed");

    auto [vs, saved] = h.post("/sessions/" + id + "/survey", {{"csat", 4}, {"nps", 9}});
    CHECK(vs == 200);
    CHECK(saved["nps"] == 9);
    auto [is, invalid] = h.post("/sessions/" + id + "/survey", {{"nps", 11}});
    CHECK(is == 422);
    CHECK(error_code(invalid) == "invalid_rating");

    auto [mstat, metrics] = h.get("/metrics");
    CHECK(mstat == 200);
    CHECK(metrics["m4_completion_rate"] == 1.0);
    CHECK(metrics["m5"]["nps"] == 100.0);
    CHECK(metrics["m5"]["csat_mean"] == 4.0);
  }
}

TEST_CASE("request errors over http") {
  Harness h;
  const std::string id = h.create();

  auto [s1, b1] = h.get("/sessions/no-such-session");
  CHECK(s1 == 404);
  CHECK(error_code(b1) == "not_found");
  auto [s2, b2] = h.get("/nowhere");
  CHECK(s2 == 404);
  CHECK(error_code(b2) == "not_found");
  auto [s3, b3] = h.post("/sessions/" + id + "/messages", {{"text", "   "}});
  CHECK(s3 == 422);
  CHECK(error_code(b3) == "empty_message");
  auto [s4, b4] = h.post("/sessions/" + id + "/messages", {{"words", "hi"}});
  CHECK(s4 == 400);
  auto bad = h.client->Post("/sessions/" + id + "/messages", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto [s5, b5] = h.upload(id, "data.pdf", std::string("%PDF-1.4\n\xE2\xE3\xCF\xD3\x00", 14));
  CHECK(s5 == 422);
  CHECK(error_code(b5) == "unsupported_format");
  CHECK(b5["error"].contains("remedy"));
  auto [s6, b6] = h.upload(id, "a.csv", "a,b\n1,2\n2,4\n3,7\n");
  CHECK(s6 == 200);
  auto [s7, b7] = h.upload(id, "b.csv", "a,b\n1,2\n2,4\n3,7\n");
  CHECK(s7 == 409);
  CHECK(error_code(b7) == "upload_conflict");
  auto [s8, b8] = h.get("/sessions/" + id + "/artifacts/a999");
  CHECK(s8 == 404);
  CHECK(error_code(b8) == "unknown_artifact");
  auto [s9, b9] = h.post("/sessions/" + id + "/pause");
  auto [s10, b10] = h.post("/sessions/" + id + "/pause");
  CHECK(s10 == 409);
}

TEST_CASE("workbook files that are not bundles are refused with a remedy") {
  Harness h;
  const std::string id = h.create();
  const std::string xlsx = tabular::write_zip({{"[Content_Types].xml", "<Types/>"}, {"xl/workbook.xml", "<workbook/>"}});
  auto [s, b] = h.upload(id, "GSNI2023.xlsx", xlsx);
  CHECK(s == 422);
  CHECK(error_code(b) == "unsupported_format");
  CHECK(!b["error"]["remedy"].get<std::string>().empty());
}

TEST_CASE("metrics on a fresh store are null") {
  Harness h;
  auto [s, m] = h.get("/metrics");
  CHECK(s == 200);
  CHECK(m["m1_mean_interactions_to_intent"].is_null());
  CHECK(m["m2"]["node_precision"].is_null());
  CHECK(m["m3_like_ratio"].is_null());
  CHECK(m["m4_completion_rate"].is_null());
  CHECK(m["m5"]["nps"].is_null());
  CHECK(m["m5"]["csat_mean"].is_null());
}

TEST_CASE("multipart uploads") {
  Harness h;
  const std::string id = h.create();
  httplib::MultipartFormDataItems items = {
      {"file", fixture(), "gender_norms.csv", "text/csv"},
  };
  auto res = h.client->Post("/sessions/" + id + "/dataset", items);
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body["report"]["sheets_transformed"].size() == 1);
}

TEST_CASE("an empty session has no story") {
  Harness h;
  const std::string id = h.create();
  auto [s, b] = h.get("/sessions/" + id + "/story");
  CHECK(s == 409);
  CHECK(error_code(b) == "empty_session");
}

TEST_CASE("http and direct engine runs produce the same artifacts") {
  Harness h;
  const std::string id = h.create();
  h.say(id, "Help me to analyse my data");
  auto [us, up] = h.upload(id, "gender_norms.csv", fixture());
  REQUIRE(us == 200);
  h.say(id, "Give me a statistical description");
  h.say(id, "Analyse the linear correlation between each couple of numerical attributes in the dataset");
  h.say(id, "Ok.");
  h.say(id, "Goodbye");
  auto [ts, transcript] = h.get("/sessions/" + id);
  REQUIRE(transcript["status"] == "completed");

  dialogue::Assistant bot;
  dialogue::UserProfile profile;
  auto direct = testing::scripted_session(bot, id);
  testing::test1(bot, direct, profile);

  REQUIRE(transcript["artifacts"].size() == direct.artifacts.size());
  for (size_t i = 0; i < direct.artifacts.size(); ++i) {
    const auto& a = direct.artifacts[i];
    const auto& b = transcript["artifacts"][i];
    CAPTURE(a.id);
    CHECK(b["id"] == a.id);
    CHECK(b["kind"] == std::string(executor::to_string(a.kind)));
    CHECK(b["sha256"] == a.sha256);
    auto bytes = h.client->Get(b["url"].get<std::string>());
    REQUIRE(bytes);
    CHECK(bytes->body == direct.payload(a));
  }
  REQUIRE(transcript["turns"].size() == direct.turns.size());
  for (size_t i = 0; i < direct.turns.size(); ++i) {
    CHECK(transcript["turns"][i]["text"] == direct.turns[i].text);
  }
}

TEST_CASE("requests on different sessions run concurrently") {
  Harness h;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(h.create());
  std::vector<std::thread> workers;
  std::vector<int> statuses(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    workers.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", h.port);
      c.set_read_timeout(60, 0);
      auto r1 = c.Post("/sessions/" + ids[i] + "/messages", json{{"text", "Help me to analyse my data"}}.dump(),
                       "application/json");
      auto r2 = c.Post("/sessions/" + ids[i] + "/dataset?filename=gender_norms.csv", fixture(),
                       "application/octet-stream");
      statuses[i] = (r1 && r2 && r1->status == 200) ? r2->status : -1;
    });
  }
  for (auto& w : workers) w.join();
  for (int s : statuses) CHECK(s == 200);
  for (const auto& id : ids) CHECK(h.store.load(id).dataset.has_value());
}

TEST_CASE("serve refuses a port in use") {
  TempDir dir;
  store::SessionStore st(dir.path.string());
  service::Api api(st);
  httplib::Server blocker;
  const int port = blocker.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  CHECK_THROWS_AS(service::serve(api, {"127.0.0.1", port}), IoError);
}
