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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/common/catalog.hpp"
#include "convex/common/error.hpp"
#include "convex/executor/executor.hpp"
#include "convex/intent/parser.hpp"
#include "convex/planner/planner.hpp"
#include "convex/tabular/ingest.hpp"

namespace convex::dialogue {

CONVEX_DEFINE_ERROR(NotABotTurnError, "not_a_bot_turn");
CONVEX_DEFINE_ERROR(NoSuchTurnError, "no_such_turn");
CONVEX_DEFINE_ERROR(EmptyMessageError, "empty_message");
CONVEX_DEFINE_ERROR(UploadConflictError, "upload_conflict");

struct UserProfile {
  std::string user_id = "default";
  std::map<std::string, int> plot_kind_likes;
  int completed_sessions = 0;
};

nlohmann::json to_json(const UserProfile& p);
UserProfile profile_from_json(const nlohmann::json& j);

// What a finished session contributes to later suggestions.
struct HistoryRecord {
  std::string session_id;
  std::vector<std::string> ops;
  std::map<std::string, int> offered;
  std::map<std::string, int> accepted;
  // Larger is more recent.
  uint64_t sequence = 0;
};

// Jaccard similarity of the two op-name sets. Two empty sets count as
// identical.
double session_similarity(const std::vector<std::string>& a,
                          const std::vector<std::string>& b);

// Records scored against `ops`, best first, ties by recency.
std::vector<std::pair<std::string, double>> rank_history(
    const std::vector<HistoryRecord>& history, const std::vector<std::string>& ops);

// The fixed ladder Correlate < Cluster < PlotRequest < EndSession, scored
// 0.5 + 0.5 * similarity-weighted historical acceptance. Each action is
// offered at most once per session.
std::optional<executor::Suggestion> propose_proactive(
    const executor::Session& session, const UserProfile& profile,
    const std::vector<HistoryRecord>& history);

struct Resources {
  const intent::Vocabulary* vocabulary = nullptr;
  const planner::TemplateLibrary* templates = nullptr;
  const executor::OperationRegistry* registry = nullptr;
  const MessageCatalog* catalog = nullptr;

  static Resources defaults();
};

struct UploadOutcome {
  nlohmann::json report;
  std::vector<executor::Turn> turns;
};

class Assistant {
 public:
  explicit Assistant(Resources resources = Resources::defaults());

  const Resources& resources() const { return res_; }

  executor::Session open_session(std::string id, uint64_t seed = 42,
                                 std::string user_id = "default") const;

  // Appends the user turn and the bot replies; returns the replies.
  std::vector<executor::Turn> handle_turn(executor::Session& session,
                                          std::string_view utterance, UserProfile& profile,
                                          const std::vector<HistoryRecord>& history = {}) const;

  // handle_turn with the parse supplied by the caller.
  std::vector<executor::Turn> handle_intent(executor::Session& session,
                                            std::string_view utterance,
                                            const intent::Intent& intent, UserProfile& profile,
                                            const std::vector<HistoryRecord>& history = {}) const;
  // Binds an uploaded file. Starts the data preparation pattern when no
  // conversation has begun. A selection pre-answers the sheet question.
  UploadOutcome upload(executor::Session& session, std::string filename, std::string bytes,
                       std::optional<tabular::SheetSelection> selection, UserProfile& profile,
                       const std::vector<HistoryRecord>& history = {},
                       std::optional<char> delimiter = std::nullopt) const;

  // Latest rating wins; a re-rating is kept in session warnings.
  void record_feedback(executor::Session& session, size_t turn_index, intent::Rating rating,
                       UserProfile& profile) const;

  // Builds the story, stores it as an artifact and completes the session.
  std::vector<executor::Turn> end_session(executor::Session& session,
                                          UserProfile& profile) const;

  intent::SessionContext context_of(const executor::Session& session) const;

 private:
  Resources res_;
};

}  // namespace convex::dialogue
