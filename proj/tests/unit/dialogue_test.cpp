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

#include <random>
#include <set>

#include "convex/dialogue/dialogue.hpp"
#include "support/conversation.hpp"
#include "support/fixtures.hpp"

using namespace convex;
using namespace convex::dialogue;
using convex::executor::Session;
using convex::executor::Speaker;
using convex::intent::ActionClass;
using convex::intent::Rating;
using convex::planner::MetaPattern;

namespace {

const Assistant& bot() {
  static const Assistant a;
  return a;
}

bool any_text(const std::vector<executor::Turn>& turns, const std::string& text) {
  for (const auto& t : turns) {
    if (t.text.find(text) != std::string::npos) return true;
  }
  return false;
}

size_t find_turn(const Session& s, executor::ArtifactKind kind, const std::string& plot = "") {
  for (size_t i = 0; i < s.turns.size(); ++i) {
    for (const auto& id : s.turns[i].artifacts) {
      const auto& a = s.require_artifact(id);
      if (a.kind == kind && (plot.empty() || a.meta.value("plot_kind", "") == plot)) return i;
    }
  }
  FAIL("no such turn");
  return 0;
}

// Structural rules every conversation must keep.
void check_invariants(const Session& s) {
  for (size_t i = 0; i < s.turns.size(); ++i) {
    const auto& t = s.turns[i];
    CHECK(t.index == i);
    if (t.speaker == Speaker::User) {
      CHECK_FALSE(t.feedback);
      if (i + 1 < s.turns.size()) CHECK(s.turns[i + 1].speaker == Speaker::Bot);
    } else {
      REQUIRE(t.pattern);
      CHECK((*t.pattern == MetaPattern::P6_Proactive) == t.meta.contains("suggestion"));
      for (const auto& id : t.artifacts) {
        CHECK_FALSE(s.require_artifact(id).explanation.empty());
        CHECK_FALSE(t.text.empty());
      }
    }
  }
  if (!s.turns.empty() && s.status == executor::SessionStatus::Active) {
    CHECK(s.turns.back().speaker == Speaker::Bot);
  }
}

}  // namespace

TEST_CASE("the handshake asks for the data collection") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s1");
  auto replies = bot().handle_turn(s, "Help me to analyse my data", profile);
  REQUIRE(replies.size() == 1);
  CHECK(replies[0].text == "Please upload your data collection.");
  CHECK(replies[0].pattern == MetaPattern::P1_DataPreparation);
  REQUIRE(s.pending);
  CHECK(s.pending->blocking);
  check_invariants(s);
}

TEST_CASE("unknown requests get a clarification") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s2");
  auto replies = bot().handle_turn(s, "florble", profile);
  REQUIRE(replies.size() == 1);
  CHECK(replies[0].pattern == MetaPattern::P4_BotRequestsInput);
  CHECK(replies[0].text.find("for example") != std::string::npos);
  CHECK_THROWS_AS(bot().handle_turn(s, "   ", profile), EmptyMessageError);
}

TEST_CASE("the use case conversation") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s3");
  bot().handle_turn(s, "Help me to analyse my data", profile);
  auto up = bot().upload(s, "gender_norms.csv",
                         read_file(testing::fixture_path("gender_norms.csv")), std::nullopt,
                         profile);
  CHECK(up.report["sheets_transformed"].size() == 1);
  CHECK(any_text(up.turns, "We are going to start a data transformation process"));
  CHECK(up.turns.back().text.find("structural or a statistical") != std::string::npos);

  auto r = bot().handle_turn(s, "Give me a statistical description", profile);
  REQUIRE(r.size() == 2);
  CHECK(r[0].artifacts.size() == 1);
  CHECK(r[0].pattern == MetaPattern::P1_DataPreparation);
  CHECK(r[1].pattern == MetaPattern::P6_Proactive);
  CHECK(r[1].meta["suggestion"] == "Correlate");

  r = bot().handle_turn(s,
                        "Analyse the linear correlation between each couple of numerical "
                        "attributes in the dataset",
                        profile);
  REQUIRE(r.size() == 3);
  CHECK(s.require_artifact(r[0].artifacts.at(0)).kind == executor::ArtifactKind::CorrelationMatrix);
  CHECK(r[1].pattern == MetaPattern::P5_BotOffersOutput);
  CHECK(r[2].text == "Are these results what you expected?");
  CHECK(s.suggestions_accepted["Correlate"] == 1);

  r = bot().handle_turn(s, "Ok.", profile);
  CHECK(s.turns[find_turn(s, executor::ArtifactKind::PlotSvg, "heatmap")].feedback == Rating::Like);
  CHECK(profile.plot_kind_likes["heatmap"] == 1);
  CHECK(r.back().meta["suggestion"] == "Cluster");

  r = bot().handle_turn(s, "Goodbye", profile);
  CHECK(s.status == executor::SessionStatus::Completed);
  REQUIRE(s.story_artifact);
  CHECK(r.front().artifacts == std::vector<std::string>{*s.story_artifact});
  CHECK(profile.completed_sessions == 1);
  check_invariants(s);
}

TEST_CASE("workbook uploads ask about sheets") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s4");
  bot().handle_turn(s, "Help me to analyse my data", profile);
  auto up = bot().upload(s, "survey.zip", testing::five_sheet_bundle(), std::nullopt, profile);
  CHECK(up.report["sheets_found"] == 5);
  CHECK(up.turns.back().text.find("5 sheets") != std::string::npos);
  CHECK(up.turns.back().text.find("Do you want me to transform all sheets?") != std::string::npos);
  auto r = bot().handle_turn(s, "Transform only the first sheet.", profile);
  REQUIRE_FALSE(r.empty());
  CHECK(s.require_artifact(*s.dataset->table_artifact).meta["table_name"] == "Sheet1");
  CHECK(r.back().text.find("structural or a statistical") != std::string::npos);
  check_invariants(s);
}

TEST_CASE("upload before the handshake starts data preparation") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s5");
  auto up = bot().upload(s, "d.csv", "a,b\n1,2\n2,4\n3,7\n", std::nullopt, profile);
  CHECK(up.report["sheets_transformed"].size() == 1);
  CHECK(s.turns.front().speaker == Speaker::User);
  CHECK(s.turns[1].pattern == MetaPattern::P1_DataPreparation);
  CHECK_FALSE(any_text(up.turns, "Please upload"));
  CHECK_THROWS_AS(bot().upload(s, "d.csv", "a\n1\n", std::nullopt, profile), UploadConflictError);
  CHECK_THROWS_AS(bot().upload(s, "x.xlsx", std::string("PK\x03\x04junk", 8), std::nullopt, profile),
                  tabular::UnsupportedFormatError);
}

TEST_CASE("feedback recording") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s6");
  testing::test1_until_feedback(bot(), s, profile);
  const size_t heat = find_turn(s, executor::ArtifactKind::PlotSvg, "heatmap");
  bot().record_feedback(s, heat, Rating::Like, profile);
  CHECK(profile.plot_kind_likes["heatmap"] == 1);
  CHECK_THROWS_AS(bot().record_feedback(s, 0, Rating::Like, profile), NotABotTurnError);
  CHECK_THROWS_AS(bot().record_feedback(s, 999, Rating::Like, profile), NoSuchTurnError);

  const size_t prof = find_turn(s, executor::ArtifactKind::Profile);
  bot().record_feedback(s, prof, Rating::Dislike, profile);
  const size_t warnings = s.warnings.size();
  bot().record_feedback(s, prof, Rating::Like, profile);
  CHECK(s.turns[prof].feedback == Rating::Like);
  CHECK(s.warnings.size() == warnings + 1);

  bot().record_feedback(s, heat, Rating::Dislike, profile);
  CHECK(profile.plot_kind_likes["heatmap"] == 0);
}

TEST_CASE("session similarity") {
  CHECK(session_similarity({"profile", "cluster"}, {"cluster", "profile"}) == 1.0);
  CHECK(session_similarity({"profile"}, {"cluster"}) == 0.0);
  // |{profile}| / |{profile, correlate, cluster}|
  CHECK(session_similarity({"profile", "correlate"}, {"profile", "cluster"}) ==
        doctest::Approx(1.0 / 3.0));
  CHECK(session_similarity({"a", "a", "b"}, {"a", "b"}) == 1.0);
}

TEST_CASE("history ranking breaks ties by recency") {
  std::vector<HistoryRecord> h = {
      {"old", {"profile", "cluster", "x"}, {}, {}, 1},
      {"none", {"y", "z", "w"}, {}, {}, 2},
      {"new", {"profile", "cluster", "x"}, {}, {}, 3},
  };
  auto ranked = rank_history(h, {"profile", "q", "r"});
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].first == "new");
  CHECK(ranked[1].first == "old");
  CHECK(ranked[2].first == "none");
  CHECK(ranked[0].second == doctest::Approx(1.0 / 5.0));
  CHECK(rank_history({}, {"profile"}).empty());
}

TEST_CASE("proactive ladder") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s7");
  CHECK_FALSE(propose_proactive(s, profile, {}));

  bot().handle_turn(s, "Help me to analyse my data", profile);
  bot().upload(s, "gender_norms.csv", read_file(testing::fixture_path("gender_norms.csv")),
               std::nullopt, profile);
  bot().handle_turn(s, "statistical", profile);
  s.suggestions_offered.clear();
  auto sug = propose_proactive(s, profile, {});
  REQUIRE(sug);
  CHECK(sug->action == ActionClass::Correlate);
  CHECK(sug->score == 0.5);

  // History raises the score: similarity 1 (same ops), 3 of 4 offers accepted.
  std::vector<HistoryRecord> h = {{"past", executor::executed_ops(s), {{"Correlate", 4}},
                                   {{"Correlate", 3}}, 1}};
  sug = propose_proactive(s, profile, h);
  CHECK(sug->score == doctest::Approx(0.5 + 0.5 * 0.75));

  bot().handle_turn(s, "Analyse the correlation", profile);
  bot().handle_turn(s, "ok", profile);
  bot().handle_turn(s, "yes", profile);  // accepts the Cluster suggestion
  CHECK(s.suggestions_accepted["Cluster"] == 1);
  bot().handle_turn(s, "good", profile);  // rates the clustering
  s.suggestions_offered.clear();
  sug = propose_proactive(s, profile, {});
  REQUIRE(sug);
  CHECK(sug->action == ActionClass::PlotRequest);  // tie with EndSession

  std::vector<HistoryRecord> prefer_story = {
      {"past", executor::executed_ops(s), {{"EndSession", 1}}, {{"EndSession", 1}}, 1}};
  CHECK(propose_proactive(s, profile, prefer_story)->action == ActionClass::EndSession);

  bot().handle_turn(s, "show the centroids", profile);
  bot().handle_turn(s, "the end", profile);
  CHECK(s.status == executor::SessionStatus::Completed);
  s.suggestions_offered.clear();
  CHECK_FALSE(propose_proactive(s, profile, {}));
  check_invariants(s);
}

TEST_CASE("paused sessions refuse messages") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s8");
  bot().handle_turn(s, "Help me to analyse my data", profile);
  auto r = bot().handle_turn(s, "pause the session", profile);
  CHECK(s.status == executor::SessionStatus::Paused);
  CHECK(r.back().text.find("s8") != std::string::npos);
  CHECK_THROWS_AS(bot().handle_turn(s, "hello", profile), executor::SessionStateError);
}

TEST_CASE("ending without analysis apologises") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s9");
  auto r = bot().handle_turn(s, "stop", profile);
  CHECK(r.back().text.find("Sorry") != std::string::npos);
  CHECK(s.status == executor::SessionStatus::Active);
}

TEST_CASE("failures become apologies and the session goes on") {
  UserProfile profile;
  auto s = testing::scripted_session(bot(), "s10");
  bot().upload(s, "d.csv", "name,a\nx,1\ny,2\nz,4\n", std::nullopt, profile);
  bot().handle_turn(s, "statistical please", profile);
  auto r = bot().handle_turn(s, "correlate the attributes", profile);
  CHECK(r.back().text.find("Sorry, correlation_matrix failed") != std::string::npos);
  r = bot().handle_turn(s, "describe the structure", profile);
  CHECK(r.front().artifacts.size() == 1);
  check_invariants(s);
}

TEST_CASE("random request sequences keep the invariants") {
  const std::vector<std::string> requests = {
      "Help me to analyse my data", "Give me a statistical description",
      "describe the structure",     "Analyse the correlation between attributes",
      "cluster my data",            "show a histogram",
      "show the heatmap",           "plot the elbow",
      "show the centroids",         "exclude gdp",
      "remove attributes with a correlation above 0.9",
      "yes",                        "no",
      "good",                       "florble",
      "select all sheets",          "cluster into 3 groups"};
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    std::mt19937_64 rng(seed);
    UserProfile profile;
    auto s = testing::scripted_session(bot(), "fuzz" + std::to_string(seed));
    bot().upload(s, "gender_norms.csv", read_file(testing::fixture_path("gender_norms.csv")),
                 std::nullopt, profile);
    std::set<MetaPattern> seen;
    for (int i = 0; i < 25; ++i) {
      const auto& u = requests[rng() % requests.size()];
      CHECK_NOTHROW(bot().handle_turn(s, u, profile));
    }
    bot().handle_turn(s, "stop", profile);
    check_invariants(s);
  }
}
