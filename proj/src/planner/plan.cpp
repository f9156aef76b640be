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

#include "convex/planner/plan.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <queue>
#include <set>

namespace convex::planner {

namespace {

template <typename E, size_t N>
using Names = std::array<std::pair<E, std::string_view>, N>;

constexpr Names<NodeKind, 4> kKinds{{{NodeKind::AbstractOp, "AbstractOp"},
                                     {NodeKind::ConcreteOp, "ConcreteOp"},
                                     {NodeKind::BotRequest, "BotRequest"},
                                     {NodeKind::UserAction, "UserAction"}}};
constexpr Names<NodeState, 7> kStates{{{NodeState::Pending, "Pending"},
                                       {NodeState::Ready, "Ready"},
                                       {NodeState::AwaitingUser, "AwaitingUser"},
                                       {NodeState::Running, "Running"},
                                       {NodeState::Completed, "Completed"},
                                       {NodeState::Failed, "Failed"},
                                       {NodeState::Skipped, "Skipped"}}};
constexpr Names<MetaPattern, 6> kPatterns{{{MetaPattern::P1_DataPreparation, "P1_DataPreparation"},
                                           {MetaPattern::P2_AnalyticsTask, "P2_AnalyticsTask"},
                                           {MetaPattern::P3_ActionRequest, "P3_ActionRequest"},
                                           {MetaPattern::P4_BotRequestsInput, "P4_BotRequestsInput"},
                                           {MetaPattern::P5_BotOffersOutput, "P5_BotOffersOutput"},
                                           {MetaPattern::P6_Proactive, "P6_Proactive"}}};
constexpr Names<DataKind, 6> kData{{{DataKind::Dataset, "Dataset"},
                                    {DataKind::Table, "Table"},
                                    {DataKind::Profile, "Profile"},
                                    {DataKind::CorrelationMatrix, "CorrelationMatrix"},
                                    {DataKind::ClusterResult, "ClusterResult"},
                                    {DataKind::Plot, "Plot"}}};

template <typename E, size_t N>
std::string_view name_of(const Names<E, N>& names, E e) {
  for (const auto& [k, v] : names) {
    if (k == e) return v;
  }
  return names[0].second;
}

template <typename E, size_t N>
std::optional<E> value_of(const Names<E, N>& names, std::string_view s) {
  for (const auto& [k, v] : names) {
    if (v == s) return k;
  }
  return std::nullopt;
}

OpSpec op(std::string name, NodeKind kind, std::vector<DataKind> in,
          std::optional<DataKind> out, nlohmann::json defaults = nlohmann::json::object(),
          std::optional<std::string> answer_param = std::nullopt) {
  return {std::move(name), kind, std::move(in), out, std::move(defaults),
          std::move(answer_param)};
}

}  // namespace

std::string_view to_string(NodeKind k) { return name_of(kKinds, k); }
std::string_view to_string(NodeState s) { return name_of(kStates, s); }
std::string_view to_string(MetaPattern p) { return name_of(kPatterns, p); }
std::string_view to_string(DataKind k) { return name_of(kData, k); }
std::optional<NodeKind> node_kind_from_string(std::string_view s) { return value_of(kKinds, s); }
std::optional<NodeState> node_state_from_string(std::string_view s) { return value_of(kStates, s); }
std::optional<MetaPattern> pattern_from_string(std::string_view s) { return value_of(kPatterns, s); }

const std::map<std::string, OpSpec>& op_catalog() {
  using K = DataKind;
  using N = NodeKind;
  static const std::map<std::string, OpSpec> catalog = [] {
    std::vector<OpSpec> ops{
        op("request_upload", N::BotRequest, {}, std::nullopt),
        op("upload", N::UserAction, {}, K::Dataset),
        op("transform", N::AbstractOp, {K::Dataset}, K::Table, {{"sheets", nullptr}}),
        op("choose_description", N::BotRequest, {}, std::nullopt, nlohmann::json::object(),
           "description"),
        op("profile", N::AbstractOp, {K::Table}, K::Profile, {{"description", "statistical"}}),
        op("numeric_view", N::AbstractOp, {K::Table}, K::Table),
        op("correlation_matrix", N::AbstractOp, {K::Table}, K::CorrelationMatrix),
        op("plot_heatmap", N::AbstractOp, {K::CorrelationMatrix}, K::Plot),
        op("request_feedback", N::BotRequest, {}, std::nullopt),
        op("prune_correlated", N::AbstractOp, {K::Table}, K::Table, {{"threshold", 0.95}}),
        op("cluster", N::AbstractOp, {K::Table}, K::ClusterResult,
           {{"k", nullptr},
            {"k_min", 2},
            {"k_max", 10},
            {"restarts", 5},
            {"max_iterations", 100},
            {"seed", 42},
            {"standardize", true},
            {"prune_threshold", 0.95}}),
        op("plot_elbow", N::AbstractOp, {K::ClusterResult}, K::Plot),
        op("plot_projection", N::AbstractOp, {K::ClusterResult}, K::Plot),
        op("plot_centroids", N::AbstractOp, {K::ClusterResult}, K::Plot),
        op("plot_histograms", N::AbstractOp, {K::Table}, K::Plot, {{"bins", 10}}),
        op("classify_alternate", N::AbstractOp, {K::Table}, K::ClusterResult),
        op("exclude_attributes", N::ConcreteOp, {K::Table}, K::Table,
           {{"attributes", nlohmann::json::array()}}),
        op("select_sheet", N::ConcreteOp, {K::Dataset}, K::Table, {{"sheets", "all"}}),
    };
    std::map<std::string, OpSpec> m;
    for (auto& o : ops) m.emplace(o.name, std::move(o));
    return m;
  }();
  return catalog;
}

const OpSpec* find_op(std::string_view name) {
  const auto& c = op_catalog();
  auto it = c.find(std::string(name));
  return it == c.end() ? nullptr : &it->second;
}

PlanNode* Plan::find(int id) {
  for (auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const PlanNode* Plan::find(int id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<int> Plan::predecessors(int id) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (b == id) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Plan::successors(int id) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (a == id) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int Plan::max_id() const {
  int m = 0;
  for (const auto& n : nodes) m = std::max(m, n.id);
  return m;
}

std::vector<int> topological_order(const Plan& plan) {
  std::map<int, int> indegree;
  for (const auto& n : plan.nodes) indegree[n.id] = 0;
  for (const auto& [a, b] : plan.edges) {
    if (indegree.count(a) && indegree.count(b)) ++indegree[b];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push(id);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    int id = ready.top();
    ready.pop();
    order.push_back(id);
    for (int s : plan.successors(id)) {
      if (indegree.count(s) && --indegree[s] == 0) ready.push(s);
    }
  }
  if (order.size() != plan.nodes.size()) return {};
  return order;
}

std::optional<int> input_source(const Plan& plan, int node_id, DataKind kind) {
  std::set<int> seen{node_id};
  std::vector<int> frontier{node_id};
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int id : frontier) {
      for (int p : plan.predecessors(id)) {
        if (seen.insert(p).second) next.push_back(p);
      }
    }
    std::optional<int> best;
    for (int id : next) {
      const PlanNode* n = plan.find(id);
      const OpSpec* spec = n ? find_op(n->op_name) : nullptr;
      if (spec && spec->output == kind && (!best || id > *best)) best = id;
    }
    if (best) return best;
    frontier = std::move(next);
  }
  return std::nullopt;
}

std::vector<Violation> validate(const Plan& plan) {
  std::vector<Violation> out;
  std::set<int> ids;
  for (const auto& n : plan.nodes) {
    if (!ids.insert(n.id).second) {
      out.push_back({"duplicate_id", "node id " + std::to_string(n.id) + " is used twice"});
    }
    if (!find_op(n.op_name)) {
      out.push_back({"unknown_op", "node " + std::to_string(n.id) + " names unknown operation '" +
                                       n.op_name + "'"});
    }
  }
  for (const auto& [a, b] : plan.edges) {
    if (!ids.count(a) || !ids.count(b)) {
      out.push_back({"dangling_edge", "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                          ") references a missing node"});
    }
  }
  bool cyclic = topological_order(plan).empty() && !plan.nodes.empty();
  if (cyclic) out.push_back({"cycle", "the plan graph contains a cycle"});
  if (!cyclic) {
    for (const auto& n : plan.nodes) {
      const OpSpec* spec = find_op(n.op_name);
      if (!spec) continue;
      for (DataKind k : spec->inputs) {
        if (input_source(plan, n.id, k)) continue;
        if ((k == DataKind::Table || k == DataKind::Dataset) && n.bound_to_dataset()) continue;
        out.push_back({"unsatisfied_input",
                       "node " + std::to_string(n.id) + " (" + n.op_name + ") needs a " +
                           std::string(to_string(k)) + " input that no predecessor produces"});
      }
    }
  }
  return out;
}

nlohmann::json normalized_params(const PlanNode& node) {
  nlohmann::json out = nlohmann::json::object();
  if (const OpSpec* spec = find_op(node.op_name)) out = spec->defaults;
  for (const auto& [k, v] : node.params.items()) {
    if (k == "value" || k == "bind" || k == "await") continue;
    out[k] = v;
  }
  return out;
}

nlohmann::json to_json(const Plan& plan) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : plan.nodes) {
    nlohmann::json j{{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"op", n.op_name},
                     {"params", n.params},
                     {"state", to_string(n.state)},
                     {"outputs", n.outputs},
                     {"completed_seq", n.completed_seq}};
    j["error"] = n.error ? nlohmann::json(*n.error) : nlohmann::json(nullptr);
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : plan.edges) edges.push_back({a, b});
  return {{"nodes", nodes},
          {"edges", edges},
          {"origin_pattern", to_string(plan.origin_pattern)},
          {"template_name", plan.template_name},
          {"merged_templates", plan.merged_templates}};
}

Plan plan_from_json(const nlohmann::json& j) {
  try {
    Plan p;
    for (const auto& n : j.at("nodes")) {
      PlanNode node;
      node.id = n.at("id").get<int>();
      auto kind = node_kind_from_string(n.at("kind").get<std::string>());
      if (!kind) throw PlanSchemaError("unknown node kind " + n.at("kind").dump());
      node.kind = *kind;
      node.op_name = n.at("op").get<std::string>();
      node.params = n.value("params", nlohmann::json::object());
      auto state = node_state_from_string(n.value("state", "Pending"));
      if (!state) throw PlanSchemaError("unknown node state " + n.at("state").dump());
      node.state = *state;
      node.outputs = n.value("outputs", std::vector<std::string>{});
      if (n.contains("error") && !n["error"].is_null()) node.error = n["error"].get<std::string>();
      node.completed_seq = n.value("completed_seq", 0);
      p.nodes.push_back(std::move(node));
    }
    std::sort(p.nodes.begin(), p.nodes.end(),
              [](const PlanNode& a, const PlanNode& b) { return a.id < b.id; });
    for (const auto& e : j.at("edges")) {
      p.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    auto pattern = pattern_from_string(j.value("origin_pattern", "P1_DataPreparation"));
    if (!pattern) throw PlanSchemaError("unknown origin pattern");
    p.origin_pattern = *pattern;
    p.template_name = j.value("template_name", "");
    p.merged_templates = j.value("merged_templates", std::vector<std::string>{});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw PlanSchemaError(std::string("malformed plan: ") + e.what());
  }
}

}  // namespace convex::planner
