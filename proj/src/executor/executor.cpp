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

#include "convex/executor/executor.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "convex/common/text.hpp"
#include "convex/tabular/csv.hpp"
#include "convex/tabular/ingest.hpp"

namespace convex::executor {

namespace {

using nlohmann::json;
using planner::DataKind;
using planner::NodeKind;
using planner::NodeState;
using planner::PlanNode;

bool legal(NodeState from, NodeState to) {
  switch (from) {
    case NodeState::Pending:
      return to == NodeState::Ready || to == NodeState::AwaitingUser ||
             to == NodeState::Skipped;
    case NodeState::Ready: return to == NodeState::Running;
    case NodeState::Running:
      return to == NodeState::Completed || to == NodeState::Failed ||
             to == NodeState::AwaitingUser;
    case NodeState::AwaitingUser: return to == NodeState::Ready;
    default: return false;
  }
}

void move_to(Session& s, PlanNode& n, NodeState to, std::string detail = "") {
  if (!legal(n.state, to)) {
    throw WrongStateError("node " + std::to_string(n.id) + " cannot go from " +
                          std::string(planner::to_string(n.state)) + " to " +
                          std::string(planner::to_string(to)));
  }
  s.append_log(n.id,
               std::string(planner::to_string(n.state)) + "->" +
                   std::string(planner::to_string(to)),
               std::move(detail));
  n.state = to;
}

std::vector<int> descendants(const planner::Plan& plan, int id) {
  std::vector<int> out;
  std::set<int> seen{id};
  std::deque<int> queue{id};
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    for (int s : plan.successors(cur)) {
      if (seen.insert(s).second) {
        out.push_back(s);
        queue.push_back(s);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void skip_descendants(Session& s, int id, const std::string& why) {
  for (int d : descendants(*s.plan, id)) {
    PlanNode* n = s.plan->find(d);
    if (n->state == NodeState::Pending) move_to(s, *n, NodeState::Skipped, why);
  }
}

std::optional<ArtifactKind> artifact_kind_for(DataKind k) {
  switch (k) {
    case DataKind::Table: return ArtifactKind::TableRef;
    case DataKind::Profile: return ArtifactKind::Profile;
    case DataKind::CorrelationMatrix: return ArtifactKind::CorrelationMatrix;
    case DataKind::ClusterResult: return ArtifactKind::ClusterResult;
    case DataKind::Plot: return ArtifactKind::PlotSvg;
    default: return std::nullopt;
  }
}

const Artifact* output_of(const Session& s, const PlanNode& n, ArtifactKind kind) {
  for (const auto& id : n.outputs) {
    const Artifact* a = s.artifact(id);
    if (a && a->kind == kind) return a;
  }
  return nullptr;
}

const Artifact* resolve_input(const Session& s, const PlanNode& node, DataKind kind) {
  auto akind = artifact_kind_for(kind);
  if (!akind) return nullptr;
  if (auto src = planner::input_source(*s.plan, node.id, kind)) {
    if (const Artifact* a = output_of(s, *s.plan->find(*src), *akind)) return a;
  }
  if (kind == DataKind::Table && s.dataset && s.dataset->table_artifact) {
    return s.artifact(*s.dataset->table_artifact);
  }
  return nullptr;
}

void load_inputs(OpContext& ctx) {
  const Session& s = ctx.session;
  const planner::OpSpec* spec = planner::find_op(ctx.node.op_name);
  if (!spec) return;
  for (DataKind k : spec->inputs) {
    if (k == DataKind::Dataset) {
      if (!s.dataset) continue;
      ctx.dataset = RawDataset{s.dataset->filename, s.blobs.at(s.dataset->blob),
                               s.dataset->delimiter};
      continue;
    }
    const Artifact* a = resolve_input(s, ctx.node, k);
    if (!a) continue;
    const std::string& bytes = s.payload(*a);
    switch (k) {
      case DataKind::Table: ctx.table = load_table(s, *a); break;
      case DataKind::CorrelationMatrix:
        ctx.correlation = profiler::correlation_from_json(json::parse(bytes));
        break;
      case DataKind::ClusterResult:
        ctx.cluster = clustering::cluster_result_from_json(json::parse(bytes));
        break;
      default: break;
    }
  }
}

// Answers of preceding bot requests flow into the params they declare.
void inject_answers(Session& s, PlanNode& node) {
  for (int p : s.plan->predecessors(node.id)) {
    const PlanNode* pred = s.plan->find(p);
    const planner::OpSpec* spec = planner::find_op(pred->op_name);
    if (pred->kind != NodeKind::BotRequest || !spec || !spec->answer_param) continue;
    if (!pred->params.contains("value")) continue;
    node.params[*spec->answer_param] = pred->params["value"];
  }
}

bool done_state(NodeState st) {
  return st == NodeState::Completed || st == NodeState::Skipped || st == NodeState::Failed;
}

bool matches(const json& value, ValueType type, const std::vector<std::string>& allowed) {
  switch (type) {
    case ValueType::None: return true;
    case ValueType::Number: return value.is_number();
    case ValueType::Object: return value.is_object();
    case ValueType::String:
      return value.is_string() &&
             (allowed.empty() || std::find(allowed.begin(), allowed.end(),
                                           value.get<std::string>()) != allowed.end());
    case ValueType::Sheets:
      if (value.is_string()) return !value.get<std::string>().empty();
      if (!value.is_array() || value.empty()) return false;
      return std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_string(); });
  }
  return false;
}

void finish_op(Session& s, PlanNode& node, const OpEntry& entry, const MessageCatalog& catalog,
               OpResult result) {
  for (auto& na : result.artifacts) {
    Artifact a;
    a.kind = na.kind;
    a.title = na.title;
    a.node_id = node.id;
    a.visible = na.visible;
    a.meta = std::move(na.meta);
    auto vars = na.vars;
    vars.emplace("title", na.title);
    const std::string key = na.key.empty() ? entry.explanation : na.key;
    a.explanation = key.empty() ? na.title : catalog.render(key, vars);
    const Artifact& stored = s.add_artifact(std::move(a), std::move(na.bytes));
    node.outputs.push_back(stored.id);
  }
  if ((node.op_name == "transform" || node.op_name == "select_sheet") && s.dataset &&
      !node.outputs.empty()) {
    s.dataset->table_artifact = node.outputs.front();
  }
}

}  // namespace

StepError::StepError(std::string code, int node_id, std::string op_name,
                     const std::string& message, StepOutcome partial)
    : Error(std::move(code), message),
      node_id_(node_id),
      op_name_(std::move(op_name)),
      partial_(std::move(partial)) {}

ResolutionError::ResolutionError(int node_id, std::string op_name, StepOutcome partial)
    : StepError("resolution_failed", node_id, op_name,
                "node " + std::to_string(node_id) + " (" + op_name +
                    ") has no implementation in the operation registry",
                std::move(partial)) {}

OpError::OpError(int node_id, std::string op_name, const std::string& message,
                 StepOutcome partial)
    : StepError("op_failed", node_id, op_name, message, std::move(partial)) {}

tabular::Table load_table(const Session& session, const Artifact& artifact) {
  std::string name = artifact.meta.value("table_name", "data");
  return tabular::parse_csv(session.payload(artifact), ',', name);
}

std::vector<std::string> executed_ops(const Session& session) {
  std::vector<std::pair<int, std::string>> done;
  if (session.plan) {
    for (const auto& n : session.plan->nodes) {
      if (n.state == NodeState::Completed && n.kind != NodeKind::BotRequest &&
          n.kind != NodeKind::UserAction) {
        done.emplace_back(n.completed_seq, n.op_name);
      }
    }
  }
  std::sort(done.begin(), done.end());
  std::vector<std::string> out;
  for (auto& [seq, name] : done) out.push_back(std::move(name));
  return out;
}

StepOutcome step(Session& s, const OperationRegistry& registry) {
  if (s.status != SessionStatus::Active) {
    throw SessionStateError("session " + s.id + " is " + std::string(to_string(s.status)));
  }
  StepOutcome out;
  if (!s.plan) {
    out.done = true;
    return out;
  }
  auto order = planner::topological_order(*s.plan);
  if (order.empty() && !s.plan->nodes.empty()) {
    throw InvalidPlanError("the plan has a cycle");
  }
  for (int id : order) {
    PlanNode& node = *s.plan->find(id);
    if (done_state(node.state)) continue;
    if (node.state == NodeState::AwaitingUser) {
      out.awaiting = id;
      break;
    }
    bool blocked = false;
    for (int p : s.plan->predecessors(id)) {
      auto st = s.plan->find(p)->state;
      if (st != NodeState::Completed && st != NodeState::Skipped) blocked = true;
    }
    if (blocked) continue;

    const OpEntry* entry = registry.find(node.op_name);
    if (!entry) {
      if (node.optional()) {
        move_to(s, node, NodeState::Skipped, "no implementation for optional node");
        continue;
      }
      move_to(s, node, NodeState::Ready);
      move_to(s, node, NodeState::Running);
      node.error = "unresolved operation " + node.op_name;
      move_to(s, node, NodeState::Failed, *node.error);
      skip_descendants(s, id, "predecessor failed");
      throw ResolutionError(id, node.op_name, out);
    }

    if (node.state == NodeState::Pending) {
      if (entry->asks && !node.params.contains("value")) {
        move_to(s, node, NodeState::AwaitingUser, entry->question);
        out.awaiting = id;
        break;
      }
      inject_answers(s, node);
      move_to(s, node, NodeState::Ready);
    }
    move_to(s, node, NodeState::Running);
    OpResult result;
    if (entry->impl) {
      OpContext ctx{s, node, planner::normalized_params(node), {}, {}, {}, {}};
      if (node.params.contains("value")) ctx.params["value"] = node.params["value"];
      try {
        load_inputs(ctx);
        result = entry->impl(ctx);
      } catch (const std::exception& e) {
        node.error = e.what();
        move_to(s, node, NodeState::Failed, e.what());
        skip_descendants(s, id, "predecessor failed");
        throw OpError(id, node.op_name, e.what(), out);
      }
    }
    if (result.await) {
      const auto& w = *result.await;
      json await = {{"key", w.key}, {"param", w.param}, {"type", to_string(w.type)},
                    {"vars", w.vars}};
      await["default"] = w.default_answer ? *w.default_answer : json(nullptr);
      node.params["await"] = await;
      move_to(s, node, NodeState::AwaitingUser, w.key);
      out.awaiting = id;
      break;
    }
    finish_op(s, node, *entry, registry.catalog(), std::move(result));
    node.completed_seq = ++s.completed_seq;
    move_to(s, node, NodeState::Completed);
    out.ran.push_back(id);
  }
  out.done = std::none_of(s.plan->nodes.begin(), s.plan->nodes.end(), [](const PlanNode& n) {
    return n.state == NodeState::Pending || n.state == NodeState::Ready ||
           n.state == NodeState::AwaitingUser;
  });
  return out;
}

ValueType expected_input(const Session& s, int node_id, const OperationRegistry& registry) {
  const PlanNode* node = s.plan ? s.plan->find(node_id) : nullptr;
  if (!node) throw WrongStateError("no node " + std::to_string(node_id));
  if (node->params.contains("await")) {
    return value_type_from_string(node->params["await"].value("type", "string"))
        .value_or(ValueType::String);
  }
  if (node->params.contains("expects")) {
    return value_type_from_string(node->params["expects"].value("type", "string"))
        .value_or(ValueType::String);
  }
  const OpEntry* e = registry.find(node->op_name);
  return e ? e->accepts : ValueType::None;
}

void provide_user_input(Session& s, int node_id, const json& value,
                        const OperationRegistry& registry) {
  PlanNode* node = s.plan ? s.plan->find(node_id) : nullptr;
  if (!node) throw WrongStateError("no node " + std::to_string(node_id));
  if (node->state != NodeState::AwaitingUser) {
    throw WrongStateError("node " + std::to_string(node_id) + " is " +
                          std::string(planner::to_string(node->state)) +
                          ", not AwaitingUser");
  }
  const ValueType type = expected_input(s, node_id, registry);
  const OpEntry* entry = registry.find(node->op_name);
  const bool awaiting_param = node->params.contains("await");
  std::vector<std::string> allowed;
  if (!awaiting_param && entry) allowed = entry->allowed;
  if (!matches(value, type, allowed)) {
    throw TypeMismatchError("node " + std::to_string(node_id) + " (" + node->op_name +
                            ") expects " + std::string(to_string(type)) +
                            (allowed.empty() ? "" : " in {" + join(allowed, ", ") + "}") +
                            ", got " + value.dump());
  }
  if (node->op_name == "upload") {
    if (!value.contains("blob") || !value["blob"].is_string() ||
        !s.blobs.count(value["blob"].get<std::string>()) || !value.contains("filename") ||
        !value["filename"].is_string()) {
      throw TypeMismatchError("upload expects {filename, blob} naming a staged upload");
    }
  }
  if (awaiting_param) {
    std::string param = node->params["await"].at("param").get<std::string>();
    node->params[param] = value;
    node->params.erase("await");
  } else {
    node->params["value"] = value;
  }
  move_to(s, *node, NodeState::Ready, value.is_object() ? "" : value.dump());
}

json stage_upload(Session& s, std::string filename, std::string bytes,
                  std::optional<char> delimiter) {
  std::string sha = s.put_blob(std::move(bytes));
  json v = {{"filename", std::move(filename)}, {"blob", sha}};
  v["delimiter"] = delimiter ? json(std::string(1, *delimiter)) : json(nullptr);
  return v;
}

json pause(Session& s) {
  if (s.status != SessionStatus::Active) {
    throw SessionStateError("only an active session can be paused; " + s.id + " is " +
                            std::string(to_string(s.status)));
  }
  s.status = SessionStatus::Paused;
  return {{"schema_version", kSnapshotVersion}, {"kind", "snapshot"},
          {"session", session_to_json(s)}};
}

Session resume(const json& snapshot, std::map<std::string, std::string> blobs) {
  if (!snapshot.is_object() || !snapshot.contains("schema_version")) {
    throw SnapshotSchemaError("snapshot has no schema_version");
  }
  const json& v = snapshot["schema_version"];
  if (!v.is_number_integer() || v.get<int>() != kSnapshotVersion) {
    throw SnapshotSchemaError("unsupported snapshot schema_version " + v.dump() +
                              " (this build reads version " +
                              std::to_string(kSnapshotVersion) + ")");
  }
  if (snapshot.value("kind", "") != "snapshot" || !snapshot.contains("session")) {
    throw SnapshotSchemaError("snapshot: expected kind \"snapshot\" with a session object");
  }
  Session s = session_from_json(snapshot["session"]);
  s.blobs = std::move(blobs);
  for (const auto& a : s.artifacts) {
    if (!s.blobs.count(a.sha256)) {
      throw SnapshotSchemaError("snapshot: payload " + a.sha256 + " of artifact " + a.id +
                                " is missing");
    }
  }
  if (s.dataset && !s.blobs.count(s.dataset->blob)) {
    throw SnapshotSchemaError("snapshot: the uploaded data collection is missing");
  }
  s.status = SessionStatus::Active;
  return s;
}

}  // namespace convex::executor
