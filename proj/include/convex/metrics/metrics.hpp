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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/common/error.hpp"
#include "convex/dialogue/dialogue.hpp"
#include "convex/executor/session.hpp"
#include "convex/planner/plan.hpp"

namespace convex::metrics {

CONVEX_DEFINE_ERROR(CorpusSchemaError, "corpus_schema");
CONVEX_DEFINE_ERROR(InvalidRatingError, "invalid_rating");

// M1: user turns spent on each recognized intent, counting unrecognized
// attempts before it. Unresolved trailing attempts are dropped.
std::vector<int> interactions_per_intent(const executor::Session& session);
// Mean of the above; nullopt when no intent was recognized.
std::optional<double> m1(const executor::Session& session);

struct PlanScore {
  double node_precision = 0;
  double node_recall = 0;
  double edge_precision = 0;
  double edge_recall = 0;
  size_t generated_nodes = 0;
  size_t gold_nodes = 0;
  size_t matched_nodes = 0;
  size_t generated_edges = 0;
  size_t gold_edges = 0;
  size_t matched_edges = 0;
};

// Nodes match when op name and normalized params are equal. Among the
// maximum matchings of equal nodes, the one matching the most edges is
// used. An empty side scores 1 against an empty side and 0 otherwise.
PlanScore m2(const planner::Plan& generated, const planner::Plan& gold);
// Micro-average: matched counts summed before dividing.
PlanScore sum_scores(const std::vector<PlanScore>& scores);

struct LikeRatio {
  size_t likes = 0;
  size_t dislikes = 0;
  std::optional<double> ratio;
};
LikeRatio m3(const std::vector<executor::Session>& sessions);

struct Completion {
  size_t with_story = 0;
  size_t terminated = 0;
  std::optional<double> rate;
};
// Stories over terminated (completed or abandoned) sessions.
Completion m4(const std::vector<executor::Session>& sessions);

struct Satisfaction {
  std::optional<double> csat_mean;
  std::optional<double> nps;
  size_t csat_count = 0;
  size_t promoters = 0;
  size_t passives = 0;
  size_t detractors = 0;
};
// CSAT on 1..5; NPS answers on 0..10 with 9-10 promoters and 0-6 detractors.
Satisfaction m5(const std::vector<int>& csat, const std::vector<int>& nps);

struct Survey {
  std::optional<int> csat;
  std::optional<int> nps;
};
nlohmann::json to_json(const Survey& s);
Survey survey_from_json(const nlohmann::json& j);

// One scripted user move.
struct Step {
  std::string move;  // phrase family, or "upload"
  std::string text;
  std::vector<std::string> rephrasings;
  std::string file;  // upload only
  std::optional<intent::Intent> gold_intent;
  nlohmann::json params = nlohmann::json::object();  // realization slots
};

struct GoldCase {
  std::string id;
  std::vector<Step> steps;
  planner::Plan gold_plan;
};

struct Corpus {
  uint64_t seed = 0;
  std::vector<GoldCase> cases;
};

inline constexpr int kCorpusSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const Corpus& corpus);
// Throws CorpusSchemaError naming the offending path.
Corpus corpus_from_json(const nlohmann::json& j);
Corpus load_corpus(const std::string& path);

// Rewrites every utterance with fresh synonym draws from `seed`.
void realize(GoldCase& c, uint64_t seed);

struct RunOptions {
  // Re-realizes the utterances when set.
  std::optional<uint64_t> seed;
  uint64_t engine_seed = 42;
  std::string fixture_dir;
  unsigned jobs = 1;
};

// Plays the case; with `gold` the parser is bypassed.
executor::Session play_case(const GoldCase& c, const dialogue::Assistant& bot,
                            const RunOptions& options, bool gold);

// Samples `n` cases from the move grammar and records their gold plans.
Corpus generate_corpus(uint64_t seed, size_t n, const dialogue::Assistant& bot,
                       const std::string& fixture_dir);

struct CaseResult {
  std::string id;
  std::vector<std::string> utterances;
  std::vector<int> interactions;
  std::optional<PlanScore> plan;
  bool story = false;
  std::vector<std::string> artifacts;  // sha256 in creation order
  std::optional<std::string> error;
  // The played session; not part of the report.
  std::shared_ptr<executor::Session> session;
};

struct MetricsReport {
  std::optional<double> m1;
  std::optional<PlanScore> m2;
  LikeRatio m3;
  Completion m4;
  Satisfaction m5;
  std::string vocabulary_version;
  std::string template_version;
  std::optional<uint64_t> seed;
  std::vector<CaseResult> cases;

  size_t errors() const;
};

nlohmann::json to_json(const MetricsReport& r);
// Human-readable summary table.
std::string format_table(const MetricsReport& r);

MetricsReport run_corpus(const Corpus& corpus, const dialogue::Assistant& bot,
                         const RunOptions& options);

// Live metrics over stored sessions; M2 is undefined without gold plans.
MetricsReport aggregate(const std::vector<executor::Session>& sessions,
                        const std::vector<Survey>& surveys,
                        const dialogue::Resources& resources);

}  // namespace convex::metrics
