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

#include <set>

#include "convex/common/files.hpp"
#include "convex/executor/executor.hpp"
#include "convex/planner/planner.hpp"
#include "support/fixtures.hpp"

using namespace convex;
using namespace convex::executor;
using convex::intent::ActionClass;
using convex::planner::NodeState;
using nlohmann::json;

namespace {

std::string fixture_csv() {
  return read_file(std::string(CONVEX_TEST_DATA_DIR) + "/fixtures/gender_norms.csv");
}

Session fresh() {
  Session s;
  s.id = "test";
  s.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return s;
}

intent::Intent intent_of(ActionClass a) {
  intent::Intent i;
  i.action = a;
  return i;
}

void start_p1(Session& s) {
  s.plan = planner::compile(intent_of(ActionClass::ExploreHandshake), {false});
}

void upload(Session& s, const std::string& name, std::string bytes) {
  auto st = step(s);
  REQUIRE(st.awaiting == 2);
  provide_user_input(s, 2, stage_upload(s, name, std::move(bytes)));
}

void follow(Session& s, ActionClass a) {
  s.plan = planner::merge_followup(*s.plan, intent_of(a), {true});
}

// The states a node may legally move between.
const std::set<std::string> kLegal = {
    "Pending->Ready",      "Pending->AwaitingUser", "Pending->Skipped",
    "Ready->Running",      "Running->Completed",    "Running->Failed",
    "Running->AwaitingUser", "AwaitingUser->Ready",
};

std::vector<std::string> artifact_hashes(const Session& s) {
  std::vector<std::string> out;
  for (const auto& a : s.artifacts) out.push_back(a.id + ":" + a.sha256);
  return out;
}

}  // namespace

TEST_CASE("P1 runs up to the upload, then to the description question") {
  auto s = fresh();
  start_p1(s);
  auto st = step(s);
  CHECK(st.ran == std::vector<int>{1});
  CHECK(st.awaiting == 2);
  CHECK_FALSE(st.done);
  CHECK(s.plan->find(2)->state == NodeState::AwaitingUser);

  provide_user_input(s, 2, stage_upload(s, "gender_norms.csv", fixture_csv()));
  CHECK(s.plan->find(2)->state == NodeState::Ready);

  st = step(s);
  CHECK(st.ran == std::vector<int>{2, 3});
  CHECK(st.awaiting == 4);
  REQUIRE(s.dataset);
  CHECK(s.dataset->filename == "gender_norms.csv");
  REQUIRE(s.dataset->table_artifact);
  const auto& table = s.require_artifact(*s.dataset->table_artifact);
  CHECK(table.kind == ArtifactKind::TableRef);
  CHECK_FALSE(table.explanation.empty());
  CHECK(load_table(s, table).n_rows() == 30);

  provide_user_input(s, 4, "structural");
  st = step(s);
  CHECK(st.ran == std::vector<int>{4, 5});
  CHECK(st.done);
  const auto& node5 = *s.plan->find(5);
  REQUIRE(node5.outputs.size() == 1);
  const auto& prof = s.require_artifact(node5.outputs[0]);
  CHECK(prof.kind == ArtifactKind::Profile);
  CHECK(json::parse(s.payload(prof))["description"] == "structural");
  CHECK(prof.explanation.find("structure") != std::string::npos);
}

TEST_CASE("answering twice is a state error") {
  auto s = fresh();
  start_p1(s);
  step(s);
  auto v = stage_upload(s, "d.csv", "a,b\n1,2\n3,5\n");
  provide_user_input(s, 2, v);
  CHECK_THROWS_AS(provide_user_input(s, 2, v), WrongStateError);
  CHECK_THROWS_AS(provide_user_input(s, 5, "x"), WrongStateError);
}

TEST_CASE("answers are checked against the node contract") {
  auto s = fresh();
  start_p1(s);
  step(s);
  CHECK_THROWS_AS(provide_user_input(s, 2, "not an object"), TypeMismatchError);
  CHECK_THROWS_AS(provide_user_input(s, 2, json{{"filename", "x.csv"}, {"blob", "missing"}}),
                  TypeMismatchError);
  CHECK(s.plan->find(2)->state == NodeState::AwaitingUser);
  provide_user_input(s, 2, stage_upload(s, "d.csv", "a,b\n1,2\n3,5\n"));
  step(s);
  CHECK_THROWS_AS(provide_user_input(s, 4, "narrative"), TypeMismatchError);
  CHECK_THROWS_AS(provide_user_input(s, 4, 3), TypeMismatchError);

  planner::Plan p;
  planner::PlanNode n;
  n.id = 1;
  n.kind = planner::NodeKind::BotRequest;
  n.op_name = "request_feedback";
  n.params = {{"expects", {{"name", "k"}, {"type", "number"}}}};
  p.nodes.push_back(n);
  auto t = fresh();
  t.plan = p;
  step(t);
  CHECK(expected_input(t, 1) == ValueType::Number);
  CHECK_THROWS_AS(provide_user_input(t, 1, "three"), TypeMismatchError);
  provide_user_input(t, 1, 3);
  CHECK(step(t).done);
}

TEST_CASE("an optional node without implementation is skipped") {
  planner::Plan p;
  planner::PlanNode n;
  n.id = 1;
  n.op_name = "classify_alternate";
  n.params = {{"optional", true}};
  p.nodes.push_back(n);
  auto s = fresh();
  s.plan = p;
  auto st = step(s);
  CHECK(st.done);
  CHECK(st.ran.empty());
  CHECK(s.plan->find(1)->state == NodeState::Skipped);
}

TEST_CASE("a missing implementation names the node") {
  auto s = fresh();
  start_p1(s);
  upload(s, "d.csv", "a,b\n1,2\n3,5\n");
  auto registry = default_registry().without("profile");
  step(s, registry);
  provide_user_input(s, 4, "statistical", registry);
  try {
    step(s, registry);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(e.node_id() == 5);
    CHECK(e.op_name() == "profile");
    CHECK(std::string(e.what()).find("node 5") != std::string::npos);
    CHECK(e.partial().ran == std::vector<int>{4});
  }
  CHECK(s.plan->find(5)->state == NodeState::Failed);
}

TEST_CASE("a failing op fails its node, skips successors, keeps the session") {
  auto s = fresh();
  start_p1(s);
  upload(s, "d.csv", "name,a\nx,1\ny,2\nz,4\n");
  step(s);
  provide_user_input(s, 4, "statistical");
  CHECK(step(s).done);
  follow(s, ActionClass::Correlate);
  try {
    step(s);
    FAIL("expected OpError");
  } catch (const OpError& e) {
    CHECK(e.op_name() == "correlation_matrix");
    CHECK(e.partial().ran.size() == 1);  // numeric_view
  }
  CHECK(s.plan->find(7)->state == NodeState::Failed);
  CHECK(s.plan->find(8)->state == NodeState::Skipped);
  CHECK(s.plan->find(9)->state == NodeState::Skipped);
  CHECK(s.status == SessionStatus::Active);
  follow(s, ActionClass::DescribeStructural);
  auto st = step(s);
  CHECK(st.done);
  CHECK(st.ran == std::vector<int>{10});
}

TEST_CASE("multi-sheet transform asks which sheets") {
  auto s = fresh();
  start_p1(s);
  upload(s, "survey.zip", testing::five_sheet_bundle());
  auto st = step(s);
  CHECK(st.awaiting == 3);
  CHECK(expected_input(s, 3) == ValueType::Sheets);
  const auto& await = s.plan->find(3)->params["await"];
  CHECK(await["key"] == "ask.sheets");
  CHECK(await["vars"]["n"] == "5");
  CHECK_THROWS_AS(provide_user_input(s, 3, 7), TypeMismatchError);
  provide_user_input(s, 3, "first");
  st = step(s);
  CHECK(st.ran == std::vector<int>{3});
  CHECK(s.plan->find(3)->outputs.size() == 1);
  CHECK(s.plan->find(3)->params["sheets"] == "first");
  CHECK(s.require_artifact(s.plan->find(3)->outputs[0]).meta["table_name"] == "Sheet1");
}

TEST_CASE("log transitions follow the state machine and predecessors finish first") {
  auto s = fresh();
  start_p1(s);
  upload(s, "gender_norms.csv", fixture_csv());
  step(s);
  provide_user_input(s, 4, "statistical");
  step(s);
  follow(s, ActionClass::Cluster);
  auto st = step(s);
  CHECK(st.awaiting == 11);
  provide_user_input(s, 11, "like");
  st = step(s);
  CHECK(st.done);
  CHECK(s.plan->find(12)->state == NodeState::Skipped);

  std::map<int, size_t> completed_at;
  std::map<int, size_t> running_at;
  for (const auto& r : s.log) {
    CHECK_MESSAGE(kLegal.count(r.transition), r.transition);
    if (r.transition == "Running->Completed") completed_at[r.node_id] = r.seq;
    if (r.transition == "Ready->Running") running_at[r.node_id] = r.seq;
  }
  for (size_t i = 0; i < s.log.size(); ++i) CHECK(s.log[i].seq == i);
  for (const auto& [id, at] : running_at) {
    for (int p : s.plan->predecessors(id)) {
      if (s.plan->find(p)->state == NodeState::Skipped) continue;
      CHECK(completed_at.at(p) < at);
    }
  }
  for (const auto& a : s.artifacts) {
    if (a.visible) CHECK_FALSE(a.explanation.empty());
  }
  const auto& cluster = s.require_artifact(s.plan->find(8)->outputs[0]);
  CHECK(cluster.explanation.find("clusters") != std::string::npos);
}

TEST_CASE("snapshot round trip resumes identically") {
  auto run_to_profile = [] {
    auto s = fresh();
    start_p1(s);
    upload(s, "gender_norms.csv", fixture_csv());
    step(s);
    provide_user_input(s, 4, "statistical");
    step(s);
    return s;
  };
  auto finish = [](Session& s) {
    follow(s, ActionClass::Correlate);
    CHECK(step(s).awaiting == 9);
    provide_user_input(s, 9, "none");
    step(s);
    follow(s, ActionClass::Cluster);
    CHECK(step(s).awaiting == 15);
  };

  auto a = run_to_profile();
  auto snap = pause(a);
  CHECK(a.status == SessionStatus::Paused);
  CHECK_THROWS_AS(step(a), SessionStateError);
  CHECK(snap["schema_version"] == 1);
  auto b = resume(json::parse(snap.dump()), a.blobs);
  b.clock = a.clock;
  CHECK(b.status == SessionStatus::Active);
  CHECK(session_to_json(b)["plan"] == session_to_json(a)["plan"]);

  auto c = run_to_profile();
  finish(b);
  finish(c);
  CHECK(artifact_hashes(b) == artifact_hashes(c));
  CHECK(planner::to_json(*b.plan) == planner::to_json(*c.plan));
}

TEST_CASE("snapshot version and payload checks") {
  auto s = fresh();
  start_p1(s);
  upload(s, "d.csv", "a,b\n1,2\n3,5\n");
  step(s);
  auto snap = pause(s);
  CHECK_THROWS_AS(pause(s), SessionStateError);
  auto bad = snap;
  bad["schema_version"] = 99;
  try {
    resume(bad, s.blobs);
    FAIL("expected SnapshotSchemaError");
  } catch (const SnapshotSchemaError& e) {
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
  CHECK_THROWS_AS(resume(json::object(), s.blobs), SnapshotSchemaError);
  CHECK_THROWS_AS(resume(snap, {}), SnapshotSchemaError);
  auto broken = snap;
  broken["session"]["turns"] = 5;
  CHECK_THROWS_AS(resume(broken, s.blobs), SnapshotSchemaError);
}

TEST_CASE("identical inputs give identical artifacts") {
  auto run = [] {
    auto s = fresh();
    start_p1(s);
    upload(s, "gender_norms.csv", fixture_csv());
    step(s);
    provide_user_input(s, 4, "both");
    step(s);
    follow(s, ActionClass::Cluster);
    step(s);
    return s;
  };
  auto a = run();
  auto b = run();
  CHECK(artifact_hashes(a) == artifact_hashes(b));
  CHECK(a.artifacts.size() >= 6);
}

TEST_CASE("every shipped template op resolves in the default registry") {
  for (const auto& t : planner::default_templates().templates()) {
    for (const auto& n : t.nodes) {
      if (n.params.value("optional", false)) continue;
      CHECK_MESSAGE(default_registry().find(n.op_name) != nullptr, n.op_name);
    }
  }
}
