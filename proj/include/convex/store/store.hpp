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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/common/error.hpp"
#include "convex/dialogue/dialogue.hpp"
#include "convex/executor/session.hpp"
#include "convex/metrics/metrics.hpp"

namespace convex::store {

CONVEX_DEFINE_ERROR(NotFoundError, "not_found");

// A stored file that does not parse or misses a field. `field()` is the
// JSON path of the first problem, e.g. "session.turns[2].text".
class CorruptError : public Error {
 public:
  CorruptError(std::string file, std::string field, const std::string& detail);
  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

inline constexpr int kStoreSchemaVersion = 1;

// Layout under the root:
//   sessions/<id>/session.json      the full session
//   sessions/<id>/snapshot.json     written while the session is paused
//   sessions/<id>/artifacts/<sha256>.<ext>
//   sessions/<id>/story.md          once the story exists
//   sessions/<id>/survey.json       satisfaction answers, when given
//   profiles.json                   user profiles
//   history.json                    op-name sets of completed sessions
//   .lock                           advisory lock for the shared files
class SessionStore {
 public:
  // Creates the root directory when missing.
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  static std::string new_session_id();

  void save(const executor::Session& session);
  executor::Session load(const std::string& id) const;
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;

  // The paused snapshot of a session; NotFoundError when it is not paused.
  nlohmann::json load_snapshot(const std::string& id) const;
  // Reads the snapshot and its payloads and resumes it.
  executor::Session resume(const std::string& id) const;

  std::filesystem::path artifact_path(const std::string& id,
                                      const executor::Artifact& artifact) const;

  dialogue::UserProfile load_profile(const std::string& user_id) const;
  void save_profile(const dialogue::UserProfile& profile);

  std::vector<dialogue::HistoryRecord> history() const;
  // Completed sessions by similarity to `ops`, best first, ties by recency.
  std::vector<std::pair<std::string, double>> query_history(
      const std::vector<std::string>& ops) const;
  // Recomputes history.json from the session files.
  void rebuild_history();

  std::vector<executor::Session> load_all() const;

  // End-of-session satisfaction answers, kept beside the session.
  void save_survey(const std::string& id, const metrics::Survey& survey);
  std::vector<metrics::Survey> surveys() const;

 private:
  std::filesystem::path session_dir(const std::string& id) const;
  std::map<std::string, std::string> read_blobs(const executor::Session& s) const;
  nlohmann::json history_json() const;

  std::filesystem::path root_;
};

// Checks the session JSON shape; returns the path of the first problem.
std::optional<std::string> session_schema_problem(const nlohmann::json& j);

}  // namespace convex::store
