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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/common/error.hpp"

namespace convex::planner {

CONVEX_DEFINE_ERROR(NoTemplateError, "no_template");
CONVEX_DEFINE_ERROR(TemplateSchemaError, "template_schema");
CONVEX_DEFINE_ERROR(PlanSchemaError, "plan_schema");

enum class NodeKind { AbstractOp, ConcreteOp, BotRequest, UserAction };
enum class NodeState { Pending, Ready, AwaitingUser, Running, Completed, Failed, Skipped };
enum class MetaPattern {
  P1_DataPreparation,
  P2_AnalyticsTask,
  P3_ActionRequest,
  P4_BotRequestsInput,
  P5_BotOffersOutput,
  P6_Proactive,
};

std::string_view to_string(NodeKind k);
std::string_view to_string(NodeState s);
std::string_view to_string(MetaPattern p);
std::optional<NodeKind> node_kind_from_string(std::string_view s);
std::optional<NodeState> node_state_from_string(std::string_view s);
std::optional<MetaPattern> pattern_from_string(std::string_view s);

// Data flowing along plan edges.
enum class DataKind { Dataset, Table, Profile, CorrelationMatrix, ClusterResult, Plot };
std::string_view to_string(DataKind k);

struct OpSpec {
  std::string name;
  NodeKind default_kind = NodeKind::AbstractOp;
  std::vector<DataKind> inputs;
  std::optional<DataKind> output;
  nlohmann::json defaults = nlohmann::json::object();
  // Bot requests: the successor parameter their answer fills.
  std::optional<std::string> answer_param;
};

// Every operation a plan may name, with its data contract.
const std::map<std::string, OpSpec>& op_catalog();
const OpSpec* find_op(std::string_view name);

struct PlanNode {
  int id = 0;
  NodeKind kind = NodeKind::AbstractOp;
  std::string op_name;
  nlohmann::json params = nlohmann::json::object();
  NodeState state = NodeState::Pending;
  std::vector<std::string> outputs;
  std::optional<std::string> error;
  // Order in which the node completed; 0 while not completed.
  int completed_seq = 0;

  bool optional() const { return params.value("optional", false); }
  bool bound_to_dataset() const { return params.value("bind", "") == "dataset"; }
};

struct Plan {
  std::vector<PlanNode> nodes;  // ascending id
  std::vector<std::pair<int, int>> edges;
  MetaPattern origin_pattern = MetaPattern::P1_DataPreparation;
  std::string template_name;
  // Templates appended by follow-ups, in order.
  std::vector<std::string> merged_templates;

  PlanNode* find(int id);
  const PlanNode* find(int id) const;
  std::vector<int> predecessors(int id) const;
  std::vector<int> successors(int id) const;
  int max_id() const;
};

struct Violation {
  std::string code;  // cycle | dangling_edge | unsatisfied_input | duplicate_id | unknown_op
  std::string message;
};

// Reports every problem found, not just the first.
std::vector<Violation> validate(const Plan& plan);

// Kahn's algorithm with ties broken by ascending id. Empty when cyclic.
std::vector<int> topological_order(const Plan& plan);

// The nearest ancestor producing `kind`: fewest edges first, then the
// highest id. nullopt when no ancestor produces it.
std::optional<int> input_source(const Plan& plan, int node_id, DataKind kind);

// Catalog defaults merged under the node's params, with runtime-only keys
// ("value", "bind", "await") removed. Used for plan comparison.
nlohmann::json normalized_params(const PlanNode& node);

nlohmann::json to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& j);

}  // namespace convex::planner
