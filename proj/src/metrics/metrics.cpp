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

#include "convex/metrics/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace convex::metrics {

using executor::Session;
using planner::Plan;

std::vector<int> interactions_per_intent(const Session& s) {
  std::vector<int> out;
  int attempts = 0;
  for (const auto& t : s.turns) {
    if (t.speaker != executor::Speaker::User || !t.meta.contains("intent")) continue;
    ++attempts;
    if (t.meta["intent"].value("action", "Unknown") != "Unknown") {
      out.push_back(attempts);
      attempts = 0;
    }
  }
  return out;
}

std::optional<double> m1(const Session& s) {
  const auto counts = interactions_per_intent(s);
  if (counts.empty()) return std::nullopt;
  return std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
}

namespace {

double ratio(size_t matched, size_t total, size_t other_total) {
  if (total == 0) return other_total == 0 ? 1.0 : 0.0;
  return static_cast<double>(matched) / static_cast<double>(total);
}

void fill_ratios(PlanScore& p) {
  p.node_precision = ratio(p.matched_nodes, p.generated_nodes, p.gold_nodes);
  p.node_recall = ratio(p.matched_nodes, p.gold_nodes, p.generated_nodes);
  p.edge_precision = ratio(p.matched_edges, p.generated_edges, p.gold_edges);
  p.edge_recall = ratio(p.matched_edges, p.gold_edges, p.generated_edges);
}

std::string node_key(const planner::PlanNode& n) {
  return n.op_name + "|" + planner::normalized_params(n).dump();
}

// Equality class: generated and gold node indices sharing a key.
struct MatchClass {
  std::vector<size_t> gen;
  std::vector<size_t> gold;
};

constexpr size_t kEnumerationLimit = 20000;

class Matcher {
 public:
  Matcher(const Plan& g, const Plan& d) : gen_(g), gold_(d) {
    std::map<std::string, MatchClass> classes;
    for (size_t i = 0; i < g.nodes.size(); ++i) classes[node_key(g.nodes[i])].gen.push_back(i);
    for (size_t i = 0; i < d.nodes.size(); ++i) classes[node_key(d.nodes[i])].gold.push_back(i);
    for (auto& [key, c] : classes) {
      if (!c.gen.empty() && !c.gold.empty()) classes_.push_back(std::move(c));
    }
    for (const auto& [a, b] : d.edges) gold_edges_.insert({a, b});
    assign_.assign(g.nodes.size(), -1);
  }

  PlanScore run() {
    size_t combos = 1;
    for (const auto& c : classes_) {
      const size_t small = std::min(c.gen.size(), c.gold.size());
      const size_t large = std::max(c.gen.size(), c.gold.size());
      for (size_t i = 0; i < small && combos <= kEnumerationLimit; ++i) combos *= (large - i);
    }
    if (combos <= kEnumerationLimit) {
      search(0);
    } else {
      // Too many ties to enumerate; pair each class in id order.
      for (const auto& c : classes_) {
        for (size_t i = 0; i < std::min(c.gen.size(), c.gold.size()); ++i) {
          assign_[c.gen[i]] = static_cast<int>(c.gold[i]);
        }
      }
      consider();
    }
    PlanScore p;
    p.generated_nodes = gen_.nodes.size();
    p.gold_nodes = gold_.nodes.size();
    p.generated_edges = gen_.edges.size();
    p.gold_edges = gold_.edges.size();
    for (const auto& c : classes_) p.matched_nodes += std::min(c.gen.size(), c.gold.size());
    p.matched_edges = best_edges_;
    fill_ratios(p);
    return p;
  }

 private:
  size_t matched_edges() const {
    std::map<int, int> id_map;
    for (size_t i = 0; i < assign_.size(); ++i) {
      if (assign_[i] >= 0) id_map[gen_.nodes[i].id] = gold_.nodes[assign_[i]].id;
    }
    size_t n = 0;
    for (const auto& [a, b] : gen_.edges) {
      auto ia = id_map.find(a), ib = id_map.find(b);
      if (ia != id_map.end() && ib != id_map.end() && gold_edges_.count({ia->second, ib->second})) {
        ++n;
      }
    }
    return n;
  }

  void consider() { best_edges_ = std::max(best_edges_, matched_edges()); }

  void search(size_t cls) {
    if (cls == classes_.size()) {
      consider();
      return;
    }
    const auto& c = classes_[cls];
    std::vector<bool> used(std::max(c.gen.size(), c.gold.size()), false);
    place(cls, 0, used);
  }

  // Assigns the i-th member of the smaller side of class `cls`.
  void place(size_t cls, size_t i, std::vector<bool>& used) {
    const auto& c = classes_[cls];
    const bool gen_small = c.gen.size() <= c.gold.size();
    const auto& small = gen_small ? c.gen : c.gold;
    const auto& large = gen_small ? c.gold : c.gen;
    if (i == small.size()) {
      search(cls + 1);
      return;
    }
    for (size_t j = 0; j < large.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      const size_t g = gen_small ? small[i] : large[j];
      const size_t d = gen_small ? large[j] : small[i];
      assign_[g] = static_cast<int>(d);
      place(cls, i + 1, used);
      assign_[g] = -1;
      used[j] = false;
    }
  }

  const Plan& gen_;
  const Plan& gold_;
  std::vector<MatchClass> classes_;
  std::set<std::pair<int, int>> gold_edges_;
  std::vector<int> assign_;
  size_t best_edges_ = 0;
};

}  // namespace

PlanScore m2(const Plan& generated, const Plan& gold) { return Matcher(generated, gold).run(); }

PlanScore sum_scores(const std::vector<PlanScore>& scores) {
  PlanScore total;
  for (const auto& s : scores) {
    total.generated_nodes += s.generated_nodes;
    total.gold_nodes += s.gold_nodes;
    total.matched_nodes += s.matched_nodes;
    total.generated_edges += s.generated_edges;
    total.gold_edges += s.gold_edges;
    total.matched_edges += s.matched_edges;
  }
  fill_ratios(total);
  return total;
}

LikeRatio m3(const std::vector<Session>& sessions) {
  LikeRatio r;
  for (const auto& s : sessions) {
    for (const auto& t : s.turns) {
      if (!t.feedback) continue;
      if (*t.feedback == intent::Rating::Like) {
        ++r.likes;
      } else {
        ++r.dislikes;
      }
    }
  }
  if (r.likes + r.dislikes > 0) {
    r.ratio = static_cast<double>(r.likes) / static_cast<double>(r.likes + r.dislikes);
  }
  return r;
}

Completion m4(const std::vector<Session>& sessions) {
  Completion c;
  for (const auto& s : sessions) {
    if (s.status != executor::SessionStatus::Completed &&
        s.status != executor::SessionStatus::Abandoned) {
      continue;
    }
    ++c.terminated;
    if (s.story_artifact) ++c.with_story;
  }
  if (c.terminated > 0) {
    c.rate = static_cast<double>(c.with_story) / static_cast<double>(c.terminated);
  }
  return c;
}

Satisfaction m5(const std::vector<int>& csat, const std::vector<int>& nps) {
  Satisfaction out;
  for (int v : csat) {
    if (v < 1 || v > 5) throw InvalidRatingError("CSAT rating " + std::to_string(v) + " is not in 1..5");
  }
  for (int v : nps) {
    if (v < 0 || v > 10) throw InvalidRatingError("NPS score " + std::to_string(v) + " is not in 0..10");
  }
  out.csat_count = csat.size();
  if (!csat.empty()) {
    out.csat_mean = std::accumulate(csat.begin(), csat.end(), 0.0) / static_cast<double>(csat.size());
  }
  for (int v : nps) {
    if (v >= 9) {
      ++out.promoters;
    } else if (v >= 7) {
      ++out.passives;
    } else {
      ++out.detractors;
    }
  }
  if (!nps.empty()) {
    const double n = static_cast<double>(nps.size());
    out.nps = (100.0 * static_cast<double>(out.promoters) - 100.0 * static_cast<double>(out.detractors)) / n;
  }
  return out;
}

nlohmann::json to_json(const Survey& s) {
  return {{"csat", s.csat ? nlohmann::json(*s.csat) : nlohmann::json(nullptr)},
          {"nps", s.nps ? nlohmann::json(*s.nps) : nlohmann::json(nullptr)}};
}

Survey survey_from_json(const nlohmann::json& j) {
  Survey s;
  if (j.contains("csat") && !j["csat"].is_null()) s.csat = j["csat"].get<int>();
  if (j.contains("nps") && !j["nps"].is_null()) s.nps = j["nps"].get<int>();
  if (s.csat && (*s.csat < 1 || *s.csat > 5)) throw InvalidRatingError("csat must be in 1..5");
  if (s.nps && (*s.nps < 0 || *s.nps > 10)) throw InvalidRatingError("nps must be in 0..10");
  return s;
}

size_t MetricsReport::errors() const {
  return static_cast<size_t>(
      std::count_if(cases.begin(), cases.end(), [](const CaseResult& c) { return c.error.has_value(); }));
}

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json to_json(const PlanScore& p) {
  return {{"node_precision", p.node_precision}, {"node_recall", p.node_recall},
          {"edge_precision", p.edge_precision}, {"edge_recall", p.edge_recall},
          {"generated_nodes", p.generated_nodes}, {"gold_nodes", p.gold_nodes},
          {"matched_nodes", p.matched_nodes},     {"generated_edges", p.generated_edges},
          {"gold_edges", p.gold_edges},           {"matched_edges", p.matched_edges}};
}

std::string fmt(const std::optional<double>& v, int decimals = 3) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"id", c.id},
                     {"utterances", c.utterances},
                     {"interactions", c.interactions},
                     {"plan", c.plan ? to_json(*c.plan) : nlohmann::json(nullptr)},
                     {"story", c.story},
                     {"artifacts", c.artifacts},
                     {"error", c.error ? nlohmann::json(*c.error) : nlohmann::json(nullptr)}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"m1_mean_interactions_to_intent", opt(r.m1)},
          {"m2", r.m2 ? to_json(*r.m2)
                      : nlohmann::json{{"node_precision", nullptr},
                                       {"node_recall", nullptr},
                                       {"edge_precision", nullptr},
                                       {"edge_recall", nullptr}}},
          {"m3_like_ratio", opt(r.m3.ratio)},
          {"m3_likes", r.m3.likes},
          {"m3_dislikes", r.m3.dislikes},
          {"m4_completion_rate", opt(r.m4.rate)},
          {"m4_sessions_with_story", r.m4.with_story},
          {"m4_terminated_sessions", r.m4.terminated},
          {"m5",
           {{"csat_mean", opt(r.m5.csat_mean)},
            {"nps", opt(r.m5.nps)},
            {"csat_responses", r.m5.csat_count},
            {"promoters", r.m5.promoters},
            {"passives", r.m5.passives},
            {"detractors", r.m5.detractors}}},
          {"vocabulary_version", r.vocabulary_version},
          {"template_version", r.template_version},
          {"seed", r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr)},
          {"case_count", r.cases.size()},
          {"case_errors", r.errors()},
          {"cases", cases}};
}

std::string format_table(const MetricsReport& r) {
  std::vector<std::pair<std::string, std::string>> rows = {
      {"M1 mean interactions to intent", fmt(r.m1)},
      {"M2 node precision", fmt(r.m2 ? std::optional(r.m2->node_precision) : std::nullopt)},
      {"M2 node recall", fmt(r.m2 ? std::optional(r.m2->node_recall) : std::nullopt)},
      {"M2 edge precision", fmt(r.m2 ? std::optional(r.m2->edge_precision) : std::nullopt)},
      {"M2 edge recall", fmt(r.m2 ? std::optional(r.m2->edge_recall) : std::nullopt)},
      {"M3 like ratio", fmt(r.m3.ratio) + " (" + std::to_string(r.m3.likes) + " likes, " +
                            std::to_string(r.m3.dislikes) + " dislikes)"},
      {"M4 completion rate", fmt(r.m4.rate) + " (" + std::to_string(r.m4.with_story) + "/" +
                                 std::to_string(r.m4.terminated) + ")"},
      {"M5 CSAT mean", fmt(r.m5.csat_mean)},
      {"M5 NPS", fmt(r.m5.nps, 1)},
      {"cases", std::to_string(r.cases.size()) + " (" + std::to_string(r.errors()) + " errors)"},
      {"vocabulary", r.vocabulary_version},
      {"templates", r.template_version},
  };
  size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::string out;
  for (const auto& [k, v] : rows) {
    out += k + std::string(width - k.size() + 2, ' ') + v + "\n";
  }
  for (const auto& c : r.cases) {
    if (c.error) out += "error in " + c.id + ": " + *c.error + "\n";
  }
  return out;
}

MetricsReport aggregate(const std::vector<Session>& sessions, const std::vector<Survey>& surveys,
                        const dialogue::Resources& res) {
  MetricsReport r;
  std::vector<int> counts;
  for (const auto& s : sessions) {
    auto c = interactions_per_intent(s);
    counts.insert(counts.end(), c.begin(), c.end());
  }
  if (!counts.empty()) {
    r.m1 = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
  }
  r.m3 = m3(sessions);
  r.m4 = m4(sessions);
  std::vector<int> csat, nps;
  for (const auto& s : surveys) {
    if (s.csat) csat.push_back(*s.csat);
    if (s.nps) nps.push_back(*s.nps);
  }
  r.m5 = m5(csat, nps);
  r.vocabulary_version = res.vocabulary->version();
  r.template_version = res.templates->version();
  return r;
}

}  // namespace convex::metrics
