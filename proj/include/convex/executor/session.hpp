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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/common/error.hpp"
#include "convex/intent/parser.hpp"
#include "convex/planner/plan.hpp"

namespace convex::executor {

CONVEX_DEFINE_ERROR(SnapshotSchemaError, "snapshot_schema");
CONVEX_DEFINE_ERROR(UnknownArtifactError, "unknown_artifact");

enum class ArtifactKind { TableRef, Profile, CorrelationMatrix, ClusterResult, PlotSvg, StoryDoc };

std::string_view to_string(ArtifactKind k);
std::optional<ArtifactKind> artifact_kind_from_string(std::string_view s);
std::string_view media_type(ArtifactKind k);
std::string_view extension(ArtifactKind k);

struct Artifact {
  std::string id;
  ArtifactKind kind = ArtifactKind::TableRef;
  std::string sha256;
  std::string title;
  std::string explanation;
  int node_id = 0;
  // Hidden artifacts are intermediate tables that get no turn of their own.
  bool visible = true;
  nlohmann::json meta = nlohmann::json::object();
};

enum class Speaker { User, Bot };
enum class SessionStatus { Active, Paused, Completed, Abandoned };

std::string_view to_string(SessionStatus s);

struct Turn {
  size_t index = 0;
  Speaker speaker = Speaker::User;
  std::string text;
  std::optional<planner::MetaPattern> pattern;
  std::vector<std::string> artifacts;
  std::optional<intent::Rating> feedback;
  std::string timestamp;
  // Bookkeeping: the parsed intent for user turns, the question node or
  // suggestion for bot turns.
  nlohmann::json meta = nlohmann::json::object();
};

struct LogRecord {
  size_t seq = 0;
  std::string timestamp;
  int node_id = 0;
  std::string transition;
  std::string detail;
};

struct Dataset {
  std::string filename;
  std::string blob;  // sha256 of the raw upload
  std::optional<char> delimiter;
  std::string format;
  std::vector<std::string> sheet_names;
  // Latest table produced by a transform or sheet selection.
  std::optional<std::string> table_artifact;
};

struct PendingQuestion {
  int node_id = 0;
  std::string key;  // message catalog key
  // Blocking questions must be answered; others are resolved with their
  // default when the user moves on.
  bool blocking = false;
};

struct Suggestion {
  intent::ActionClass action = intent::ActionClass::Unknown;
  std::string rationale;
  double score = 0;
};

struct Session {
  std::string id;
  std::string user_id = "default";
  SessionStatus status = SessionStatus::Active;
  uint64_t seed = 42;
  std::optional<planner::Plan> plan;
  std::vector<Turn> turns;
  std::vector<Artifact> artifacts;
  // Content-addressed payloads: sha256 -> bytes.
  std::map<std::string, std::string> blobs;
  size_t next_artifact = 1;
  int completed_seq = 0;
  std::optional<Dataset> dataset;
  std::vector<LogRecord> log;
  std::optional<PendingQuestion> pending;
  std::optional<Suggestion> suggestion;
  std::vector<std::string> warnings;
  std::optional<std::string> story_artifact;
  // MetaPattern of the template each plan node came from.
  std::map<int, planner::MetaPattern> node_patterns;
  // Proactive suggestions per action name, for the history index.
  std::map<std::string, int> suggestions_offered;
  std::map<std::string, int> suggestions_accepted;
  std::string vocabulary_version;
  std::string template_version;
  // Not serialized. Defaults to UTC wall time.
  std::function<std::string()> clock;

  std::string now() const;
  const Artifact* artifact(std::string_view id) const;
  const Artifact& require_artifact(std::string_view id) const;
  const std::string& payload(const Artifact& a) const;
  std::string put_blob(std::string bytes);
  const Artifact& add_artifact(Artifact a, std::string bytes);
  void append_log(int node_id, std::string transition, std::string detail = "");
};

std::string utc_now();

inline constexpr int kSnapshotVersion = 1;

nlohmann::json to_json(const Turn& t);
Turn turn_from_json(const nlohmann::json& j);

// The whole session without blob payloads.
nlohmann::json session_to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);

}  // namespace convex::executor
