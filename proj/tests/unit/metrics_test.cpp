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

#include <functional>
#include <map>
#include <set>

#include "convex/metrics/metrics.hpp"
#include "support/fixtures.hpp"

using namespace convex;
using planner::Plan;

namespace {

executor::Session with_attempts(const std::vector<std::string>& actions) {
  executor::Session s;
  size_t i = 0;
  for (const auto& a : actions) {
    executor::Turn t;
    t.index = i++;
    t.speaker = executor::Speaker::User;
    t.text = a;
    t.meta = {{"intent", {{"action", a}}}};
    s.turns.push_back(t);
  }
  return s;
}

Plan chain(const std::vector<std::string>& ops, int first_id = 1) {
  Plan p;
  int id = first_id;
  for (const auto& op : ops) {
    planner::PlanNode n;
    n.id = id++;
    n.kind = planner::NodeKind::ConcreteOp;
    n.op_name = op;
    p.nodes.push_back(n);
  }
  for (size_t i = 1; i < p.nodes.size(); ++i) p.edges.emplace_back(p.nodes[i - 1].id, p.nodes[i].id);
  return p;
}

planner::PlanNode node(int id, const std::string& op, nlohmann::json params = nlohmann::json::object()) {
  planner::PlanNode n;
  n.id = id;
  n.kind = planner::NodeKind::ConcreteOp;
  n.op_name = op;
  n.params = std::move(params);
  return n;
}

// Every injective partial matching of equal nodes; the best (nodes, edges)
// pair in lexicographic order.
std::pair<size_t, size_t> brute_force(const Plan& g, const Plan& d) {
  auto key = [](const planner::PlanNode& n) {
    return n.op_name + planner::normalized_params(n).dump();
  };
  std::set<std::pair<int, int>> gold_edges(d.edges.begin(), d.edges.end());
  std::pair<size_t, size_t> best{0, 0};
  std::vector<int> map(g.nodes.size(), -1);
  std::vector<bool> used(d.nodes.size(), false);
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == g.nodes.size()) {
      size_t nodes = 0, edges = 0;
      std::map<int, int> id;
      for (size_t k = 0; k < map.size(); ++k) {
        if (map[k] >= 0) {
          ++nodes;
          id[g.nodes[k].id] = d.nodes[map[k]].id;
        }
      }
      for (const auto& [a, b] : g.edges) {
        if (id.count(a) && id.count(b) && gold_edges.count({id[a], id[b]})) ++edges;
      }
      best = std::max(best, std::make_pair(nodes, edges));
      return;
    }
    rec(i + 1);
    for (size_t j = 0; j < d.nodes.size(); ++j) {
      if (used[j] || key(g.nodes[i]) != key(d.nodes[j])) continue;
      used[j] = true;
      map[i] = static_cast<int>(j);
      rec(i + 1);
      map[i] = -1;
      used[j] = false;
    }
  };
  rec(0);
  return best;
}

Plan random_plan(testing::Rng& rng, size_t n) {
  static const std::vector<std::string> ops = {"profile", "numeric_view", "correlation_matrix",
                                               "plot_heatmap"};
  Plan p;
  for (size_t i = 0; i < n; ++i) {
    auto nd = node(static_cast<int>(i + 1), ops[rng.index(ops.size())]);
    if (nd.op_name == "profile" && rng.uniform() < 0.5) nd.params["description"] = "structural";
    p.nodes.push_back(nd);
  }
  for (size_t a = 0; a < n; ++a) {
    for (size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < 0.35) p.edges.emplace_back(static_cast<int>(a + 1), static_cast<int>(b + 1));
    }
  }
  return p;
}

metrics::RunOptions fixture_options() {
  metrics::RunOptions o;
  o.fixture_dir = std::string(CONVEX_TEST_DATA_DIR) + "/fixtures";
  return o;
}

metrics::Corpus shipped_corpus() {
  return metrics::load_corpus(std::string(CONVEX_TEST_DATA_DIR) + "/corpus.json");
}

}  // namespace

TEST_CASE("M1 interactions to intent") {
  CHECK(*metrics::m1(with_attempts({"Correlate", "Cluster", "EndSession"})) == 1.0);
  CHECK(*metrics::m1(with_attempts({"Unknown", "Correlate"})) == 2.0);
  // [1, 2, 3]: mean 2.
  auto mixed = with_attempts({"Correlate", "Unknown", "Cluster", "Unknown", "Unknown", "EndSession"});
  CHECK(metrics::interactions_per_intent(mixed) == std::vector<int>{1, 2, 3});
  CHECK(*metrics::m1(mixed) == 2.0);
  CHECK_FALSE(metrics::m1(with_attempts({"Unknown", "Unknown"})).has_value());
  CHECK_FALSE(metrics::m1(executor::Session{}).has_value());
}

TEST_CASE("M2 identical, disjoint and the hand-counted chain") {
  const Plan gold = chain({"request_upload", "upload", "transform", "profile"});
  auto same = metrics::m2(gold, gold);
  CHECK(same.node_precision == 1.0);
  CHECK(same.node_recall == 1.0);
  CHECK(same.edge_precision == 1.0);
  CHECK(same.edge_recall == 1.0);

  // Missing the last of four chained nodes: 3 of 4 nodes, 2 of 3 edges.
  const Plan short_plan = chain({"request_upload", "upload", "transform"});
  auto s = metrics::m2(short_plan, gold);
  CHECK(s.node_precision == 1.0);
  CHECK(s.node_recall == 0.75);
  CHECK(s.edge_precision == 1.0);
  CHECK(s.edge_recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const auto bf = brute_force(short_plan, gold);
  CHECK(bf.first == s.matched_nodes);
  CHECK(bf.second == s.matched_edges);

  auto disjoint = metrics::m2(chain({"cluster", "plot_elbow"}), chain({"profile", "correlation_matrix"}));
  CHECK(disjoint.node_precision == 0.0);
  CHECK(disjoint.node_recall == 0.0);
  CHECK(disjoint.edge_precision == 0.0);
  CHECK(disjoint.edge_recall == 0.0);
}

TEST_CASE("M2 compares normalized params") {
  Plan a, b;
  a.nodes = {node(1, "cluster", {{"k", nullptr}, {"value", "x"}})};
  b.nodes = {node(7, "cluster")};
  CHECK(metrics::m2(a, b).node_precision == 1.0);
  b.nodes[0].params["k"] = 3;
  CHECK(metrics::m2(a, b).node_precision == 0.0);
}

TEST_CASE("M2 picks the matching that keeps the most edges") {
  // Two equal profile nodes in gold; only the second one feeds the matrix.
  Plan gold;
  gold.nodes = {node(1, "profile"), node(2, "profile"), node(3, "numeric_view")};
  gold.edges = {{2, 3}};
  Plan gen;
  gen.nodes = {node(1, "profile"), node(2, "numeric_view")};
  gen.edges = {{1, 2}};
  auto s = metrics::m2(gen, gold);
  CHECK(s.matched_nodes == 2);
  CHECK(s.matched_edges == 1);
}

TEST_CASE("M2 agrees with brute force and is symmetric") {
  testing::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Plan g = random_plan(rng, 1 + rng.index(6));
    const Plan d = random_plan(rng, 1 + rng.index(6));
    const auto s = metrics::m2(g, d);
    const auto bf = brute_force(g, d);
    REQUIRE(s.matched_nodes == bf.first);
    REQUIRE(s.matched_edges == bf.second);
    const auto r = metrics::m2(d, g);
    CHECK(r.node_precision == s.node_recall);
    CHECK(r.node_recall == s.node_precision);
    CHECK(r.edge_precision == s.edge_recall);
    CHECK(r.edge_recall == s.edge_precision);
  }
}

TEST_CASE("M3, M4 and M5 arithmetic") {
  executor::Session s;
  for (auto r : {intent::Rating::Like, intent::Rating::Like, intent::Rating::Dislike}) {
    executor::Turn t;
    t.speaker = executor::Speaker::Bot;
    t.feedback = r;
    s.turns.push_back(t);
  }
  auto like = metrics::m3({s});
  CHECK(like.likes == 2);
  CHECK(like.dislikes == 1);
  CHECK(*like.ratio == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(metrics::m3({}).ratio.has_value());

  std::vector<executor::Session> sessions(5);
  for (int i = 0; i < 4; ++i) sessions[i].status = executor::SessionStatus::Completed;
  sessions[3].status = executor::SessionStatus::Abandoned;
  for (int i = 0; i < 3; ++i) sessions[i].story_artifact = "a1";
  // sessions[4] is still active and does not count.
  auto done = metrics::m4(sessions);
  CHECK(done.terminated == 4);
  CHECK(*done.rate == 0.75);
  CHECK_FALSE(metrics::m4({}).rate.has_value());

  // Promoters 10,9,9,10,9 (5); detractors 6,3,2 (3); 100 * (5 - 3) / 10.
  auto sat = metrics::m5({5, 4, 3}, {10, 9, 9, 8, 7, 6, 3, 10, 9, 2});
  CHECK(sat.promoters == 5);
  CHECK(sat.passives == 2);
  CHECK(sat.detractors == 3);
  CHECK(*sat.nps == 20.0);
  CHECK(*sat.csat_mean == 4.0);
  CHECK(*metrics::m5({}, {10, 10}).nps == 100.0);
  CHECK(*metrics::m5({}, {0}).nps == -100.0);
  CHECK_FALSE(metrics::m5({}, {}).nps.has_value());
  CHECK_THROWS_AS(metrics::m5({6}, {}), metrics::InvalidRatingError);
  CHECK_THROWS_AS(metrics::m5({}, {11}), metrics::InvalidRatingError);
}

TEST_CASE("corpus schema errors") {
  CHECK_THROWS_AS(metrics::corpus_from_json({{"schema_version", 1}, {"cases", nlohmann::json::array()}}),
                  metrics::CorpusSchemaError);
  CHECK_THROWS_AS(metrics::run_corpus({}, dialogue::Assistant(), fixture_options()),
                  metrics::CorpusSchemaError);
  auto j = metrics::to_json(shipped_corpus());
  SUBCASE("unknown move") {
    j["cases"][2]["steps"][0]["move"] = "juggle";
    try {
      metrics::corpus_from_json(j);
      FAIL("expected CorpusSchemaError");
    } catch (const metrics::CorpusSchemaError& e) {
      CHECK(std::string(e.what()).find("cases[2].steps[0].move") != std::string::npos);
    }
  }
  SUBCASE("cyclic gold plan") {
    j["cases"][0]["gold_plan"]["edges"].push_back({5, 1});
    CHECK_THROWS_AS(metrics::corpus_from_json(j), metrics::CorpusSchemaError);
  }
  SUBCASE("missing gold plan") {
    j["cases"][1].erase("gold_plan");
    CHECK_THROWS_AS(metrics::corpus_from_json(j), metrics::CorpusSchemaError);
  }
  SUBCASE("round trip") { CHECK(metrics::to_json(metrics::corpus_from_json(j)) == j); }
}

TEST_CASE("shipped corpus run") {
  const auto corpus = shipped_corpus();
  REQUIRE(corpus.cases.size() == 30);
  dialogue::Assistant bot;
  auto report = metrics::run_corpus(corpus, bot, fixture_options());
  CHECK(report.errors() == 0);
  CHECK(report.m1.has_value());
  REQUIRE(report.m2.has_value());
  CHECK(report.m3.ratio.has_value());
  CHECK(report.m4.rate.has_value());
  CHECK(report.vocabulary_version == bot.resources().vocabulary->version());
  CHECK(report.template_version == bot.resources().templates->version());
  CHECK(*report.m1 >= 1.0);
  for (double v : {report.m2->node_precision, report.m2->node_recall,
                   report.m2->edge_precision, report.m2->edge_recall, *report.m3.ratio, *report.m4.rate}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  SUBCASE("parallel run reduces to the same report") {
    auto opts = fixture_options();
    opts.jobs = 4;
    CHECK(metrics::to_json(metrics::run_corpus(corpus, bot, opts)).dump() ==
          metrics::to_json(report).dump());
  }
  SUBCASE("a new realization seed changes only the wording") {
    auto opts = fixture_options();
    opts.seed = 99;
    auto other = metrics::run_corpus(corpus, bot, opts);
    CHECK(metrics::to_json(other)["m2"] == metrics::to_json(report)["m2"]);
    size_t changed = 0;
    for (size_t i = 0; i < report.cases.size(); ++i) {
      changed += other.cases[i].utterances != report.cases[i].utterances;
      CHECK(metrics::to_json(other)["cases"][i]["plan"] == metrics::to_json(report)["cases"][i]["plan"]);
    }
    CHECK(changed > 0);
  }
}

TEST_CASE("one-case corpus with a template gold plan") {
  auto corpus = shipped_corpus();
  const auto& templates = dialogue::Assistant().resources().templates;
  const auto p1 = planner::instantiate(*templates->find("p1_data_preparation"));
  std::optional<metrics::GoldCase> match;
  for (const auto& c : corpus.cases) {
    if (metrics::m2(c.gold_plan, p1).node_precision == 1.0 &&
        c.gold_plan.nodes.size() == p1.nodes.size() && c.gold_plan.edges == p1.edges) {
      match = c;
      break;
    }
  }
  REQUIRE(match.has_value());
  metrics::Corpus one;
  one.cases = {*match};
  auto r = metrics::run_corpus(one, dialogue::Assistant(), fixture_options());
  REQUIRE(r.m2.has_value());
  CHECK(r.m2->node_precision == 1.0);
  CHECK(r.m2->node_recall == 1.0);
  CHECK(r.m2->edge_precision == 1.0);
  CHECK(r.m2->edge_recall == 1.0);
}

TEST_CASE("live aggregate over nothing is undefined") {
  auto r = metrics::aggregate({}, {}, dialogue::Resources::defaults());
  auto j = metrics::to_json(r);
  CHECK(j["m1_mean_interactions_to_intent"].is_null());
  CHECK(j["m2"]["node_precision"].is_null());
  CHECK(j["m3_like_ratio"].is_null());
  CHECK(j["m4_completion_rate"].is_null());
  CHECK(j["m5"]["csat_mean"].is_null());
  CHECK(j["m5"]["nps"].is_null());
}
