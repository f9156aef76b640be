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

#include "convex/executor/session.hpp"

#include <chrono>
#include <ctime>

#include "convex/common/digest.hpp"

namespace convex::executor {

namespace {

constexpr std::pair<ArtifactKind, const char*> kKinds[] = {
    {ArtifactKind::TableRef, "TableRef"},
    {ArtifactKind::Profile, "Profile"},
    {ArtifactKind::CorrelationMatrix, "CorrelationMatrix"},
    {ArtifactKind::ClusterResult, "ClusterResult"},
    {ArtifactKind::PlotSvg, "PlotSvg"},
    {ArtifactKind::StoryDoc, "StoryDoc"},
};

constexpr std::pair<SessionStatus, const char*> kStatuses[] = {
    {SessionStatus::Active, "active"},
    {SessionStatus::Paused, "paused"},
    {SessionStatus::Completed, "completed"},
    {SessionStatus::Abandoned, "abandoned"},
};

SessionStatus status_from_string(const std::string& s) {
  for (const auto& [v, n] : kStatuses) {
    if (s == n) return v;
  }
  throw SnapshotSchemaError("unknown session status '" + s + "'");
}

}  // namespace

std::string_view to_string(ArtifactKind k) {
  for (const auto& [v, n] : kKinds) {
    if (v == k) return n;
  }
  return "TableRef";
}

std::optional<ArtifactKind> artifact_kind_from_string(std::string_view s) {
  for (const auto& [v, n] : kKinds) {
    if (s == n) return v;
  }
  return std::nullopt;
}

std::string_view media_type(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::TableRef: return "text/csv";
    case ArtifactKind::PlotSvg: return "image/svg+xml";
    case ArtifactKind::StoryDoc: return "text/markdown; charset=utf-8";
    default: return "application/json";
  }
}

std::string_view extension(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::TableRef: return "csv";
    case ArtifactKind::PlotSvg: return "svg";
    case ArtifactKind::StoryDoc: return "md";
    default: return "json";
  }
}

std::string_view to_string(SessionStatus s) {
  for (const auto& [v, n] : kStatuses) {
    if (v == s) return n;
  }
  return "active";
}

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string Session::now() const { return clock ? clock() : utc_now(); }

const Artifact* Session::artifact(std::string_view id) const {
  for (const auto& a : artifacts) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const Artifact& Session::require_artifact(std::string_view id) const {
  const Artifact* a = artifact(id);
  if (!a) throw UnknownArtifactError("no artifact '" + std::string(id) + "'");
  return *a;
}

const std::string& Session::payload(const Artifact& a) const {
  auto it = blobs.find(a.sha256);
  if (it == blobs.end()) {
    throw UnknownArtifactError("payload of artifact '" + a.id + "' is missing");
  }
  return it->second;
}

std::string Session::put_blob(std::string bytes) {
  std::string sha = sha256_hex(bytes);
  blobs.emplace(sha, std::move(bytes));
  return sha;
}

const Artifact& Session::add_artifact(Artifact a, std::string bytes) {
  a.id = "a" + std::to_string(next_artifact++);
  a.sha256 = put_blob(std::move(bytes));
  artifacts.push_back(std::move(a));
  return artifacts.back();
}

void Session::append_log(int node_id, std::string transition, std::string detail) {
  log.push_back({log.size(), now(), node_id, std::move(transition), std::move(detail)});
}

nlohmann::json to_json(const Turn& t) {
  nlohmann::json j = {{"index", t.index},
                      {"speaker", t.speaker == Speaker::User ? "user" : "bot"},
                      {"text", t.text},
                      {"artifacts", t.artifacts},
                      {"timestamp", t.timestamp},
                      {"meta", t.meta}};
  j["pattern"] = t.pattern ? nlohmann::json(planner::to_string(*t.pattern)) : nlohmann::json(nullptr);
  j["feedback"] = t.feedback ? nlohmann::json(intent::to_string(*t.feedback)) : nlohmann::json(nullptr);
  return j;
}

Turn turn_from_json(const nlohmann::json& j) {
  Turn t;
  t.index = j.at("index").get<size_t>();
  const auto speaker = j.at("speaker").get<std::string>();
  if (speaker != "user" && speaker != "bot") {
    throw SnapshotSchemaError("turns[" + std::to_string(t.index) +
                              "].speaker: unknown value '" + speaker + "'");
  }
  t.speaker = speaker == "user" ? Speaker::User : Speaker::Bot;
  t.text = j.at("text").get<std::string>();
  t.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  t.timestamp = j.value("timestamp", "");
  t.meta = j.value("meta", nlohmann::json::object());
  if (j.contains("pattern") && !j["pattern"].is_null()) {
    t.pattern = planner::pattern_from_string(j["pattern"].get<std::string>());
    if (!t.pattern) throw SnapshotSchemaError("turns[].pattern: unknown pattern");
  }
  if (j.contains("feedback") && !j["feedback"].is_null()) {
    t.feedback = intent::rating_from_string(j["feedback"].get<std::string>());
    if (!t.feedback) throw SnapshotSchemaError("turns[].feedback: unknown rating");
  }
  return t;
}

nlohmann::json session_to_json(const Session& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["user_id"] = s.user_id;
  j["status"] = to_string(s.status);
  j["seed"] = s.seed;
  j["plan"] = s.plan ? planner::to_json(*s.plan) : nlohmann::json(nullptr);
  j["turns"] = nlohmann::json::array();
  for (const auto& t : s.turns) j["turns"].push_back(to_json(t));
  j["artifacts"] = nlohmann::json::array();
  for (const auto& a : s.artifacts) {
    j["artifacts"].push_back({{"id", a.id},
                              {"kind", to_string(a.kind)},
                              {"media_type", media_type(a.kind)},
                              {"sha256", a.sha256},
                              {"title", a.title},
                              {"explanation", a.explanation},
                              {"node_id", a.node_id},
                              {"visible", a.visible},
                              {"meta", a.meta}});
  }
  j["next_artifact"] = s.next_artifact;
  j["completed_seq"] = s.completed_seq;
  if (s.dataset) {
    const auto& d = *s.dataset;
    j["dataset"] = {{"filename", d.filename},
                    {"blob", d.blob},
                    {"format", d.format},
                    {"sheet_names", d.sheet_names}};
    j["dataset"]["delimiter"] =
        d.delimiter ? nlohmann::json(std::string(1, *d.delimiter)) : nlohmann::json(nullptr);
    j["dataset"]["table_artifact"] =
        d.table_artifact ? nlohmann::json(*d.table_artifact) : nlohmann::json(nullptr);
  } else {
    j["dataset"] = nullptr;
  }
  j["log"] = nlohmann::json::array();
  for (const auto& r : s.log) {
    j["log"].push_back({{"seq", r.seq},
                        {"timestamp", r.timestamp},
                        {"node_id", r.node_id},
                        {"transition", r.transition},
                        {"detail", r.detail}});
  }
  j["pending"] = s.pending ? nlohmann::json{{"node_id", s.pending->node_id},
                                            {"key", s.pending->key},
                                            {"blocking", s.pending->blocking}}
                           : nlohmann::json(nullptr);
  j["suggestion"] = s.suggestion
                        ? nlohmann::json{{"action", intent::to_string(s.suggestion->action)},
                                         {"rationale", s.suggestion->rationale},
                                         {"score", s.suggestion->score}}
                        : nlohmann::json(nullptr);
  j["warnings"] = s.warnings;
  j["story_artifact"] = s.story_artifact ? nlohmann::json(*s.story_artifact) : nlohmann::json(nullptr);
  j["vocabulary_version"] = s.vocabulary_version;
  j["template_version"] = s.template_version;
  nlohmann::json patterns = nlohmann::json::object();
  for (const auto& [id, p] : s.node_patterns) patterns[std::to_string(id)] = planner::to_string(p);
  j["node_patterns"] = patterns;
  j["suggestions_offered"] = s.suggestions_offered;
  j["suggestions_accepted"] = s.suggestions_accepted;
  return j;
}

Session session_from_json(const nlohmann::json& j) {
  Session s;
  try {
    s.id = j.at("id").get<std::string>();
    s.user_id = j.value("user_id", "default");
    s.status = status_from_string(j.at("status").get<std::string>());
    s.seed = j.at("seed").get<uint64_t>();
    if (!j.at("plan").is_null()) s.plan = planner::plan_from_json(j["plan"]);
    for (const auto& t : j.at("turns")) s.turns.push_back(turn_from_json(t));
    for (const auto& a : j.at("artifacts")) {
      Artifact art;
      art.id = a.at("id").get<std::string>();
      auto kind = artifact_kind_from_string(a.at("kind").get<std::string>());
      if (!kind) throw SnapshotSchemaError("artifacts[].kind: unknown kind for " + art.id);
      art.kind = *kind;
      art.sha256 = a.at("sha256").get<std::string>();
      art.title = a.value("title", "");
      art.explanation = a.value("explanation", "");
      art.node_id = a.value("node_id", 0);
      art.visible = a.value("visible", true);
      art.meta = a.value("meta", nlohmann::json::object());
      s.artifacts.push_back(std::move(art));
    }
    s.next_artifact = j.at("next_artifact").get<size_t>();
    s.completed_seq = j.at("completed_seq").get<int>();
    if (!j.at("dataset").is_null()) {
      const auto& d = j["dataset"];
      Dataset ds;
      ds.filename = d.at("filename").get<std::string>();
      ds.blob = d.at("blob").get<std::string>();
      ds.format = d.value("format", "");
      ds.sheet_names = d.value("sheet_names", std::vector<std::string>{});
      if (d.contains("delimiter") && !d["delimiter"].is_null()) {
        auto text = d["delimiter"].get<std::string>();
        if (text.size() != 1) throw SnapshotSchemaError("dataset.delimiter: expected one character");
        ds.delimiter = text[0];
      }
      if (d.contains("table_artifact") && !d["table_artifact"].is_null()) {
        ds.table_artifact = d["table_artifact"].get<std::string>();
      }
      s.dataset = std::move(ds);
    }
    for (const auto& r : j.at("log")) {
      s.log.push_back({r.at("seq").get<size_t>(), r.at("timestamp").get<std::string>(),
                       r.at("node_id").get<int>(), r.at("transition").get<std::string>(),
                       r.value("detail", "")});
    }
    if (!j.at("pending").is_null()) {
      const auto& p = j["pending"];
      s.pending = PendingQuestion{p.at("node_id").get<int>(), p.at("key").get<std::string>(),
                                  p.at("blocking").get<bool>()};
    }
    if (!j.at("suggestion").is_null()) {
      const auto& g = j["suggestion"];
      auto action = intent::action_from_string(g.at("action").get<std::string>());
      if (!action) throw SnapshotSchemaError("suggestion.action: unknown action");
      s.suggestion = Suggestion{*action, g.at("rationale").get<std::string>(),
                                g.at("score").get<double>()};
    }
    s.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("story_artifact") && !j["story_artifact"].is_null()) {
      s.story_artifact = j["story_artifact"].get<std::string>();
    }
    s.vocabulary_version = j.value("vocabulary_version", "");
    s.template_version = j.value("template_version", "");
    const auto patterns = j.value("node_patterns", nlohmann::json::object());
    for (const auto& [id, p] : patterns.items()) {
      auto pattern = planner::pattern_from_string(p.get<std::string>());
      if (!pattern) throw SnapshotSchemaError("node_patterns." + id + ": unknown pattern");
      s.node_patterns[std::stoi(id)] = *pattern;
    }
    s.suggestions_offered =
        j.value("suggestions_offered", std::map<std::string, int>{});
    s.suggestions_accepted =
        j.value("suggestions_accepted", std::map<std::string, int>{});
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotSchemaError(std::string("session: ") + e.what());
  } catch (const planner::PlanSchemaError& e) {
    throw SnapshotSchemaError(std::string("session.plan: ") + e.what());
  }
  return s;
}

}  // namespace convex::executor
