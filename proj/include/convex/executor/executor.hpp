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
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/common/error.hpp"
#include "convex/executor/registry.hpp"
#include "convex/executor/session.hpp"

namespace convex::executor {

struct StepOutcome {
  std::vector<int> ran;  // completed, in execution order
  std::optional<int> awaiting;
  bool done = false;
};

// A node failure. The plan keeps the node Failed and its pending
// descendants Skipped; `partial` lists what ran before the failure.
class StepError : public Error {
 public:
  StepError(std::string code, int node_id, std::string op_name,
            const std::string& message, StepOutcome partial);
  int node_id() const { return node_id_; }
  const std::string& op_name() const { return op_name_; }
  const StepOutcome& partial() const { return partial_; }

 private:
  int node_id_;
  std::string op_name_;
  StepOutcome partial_;
};

class ResolutionError : public StepError {
 public:
  ResolutionError(int node_id, std::string op_name, StepOutcome partial);
};

class OpError : public StepError {
 public:
  OpError(int node_id, std::string op_name, const std::string& message,
          StepOutcome partial);
};

CONVEX_DEFINE_ERROR(WrongStateError, "wrong_state");
CONVEX_DEFINE_ERROR(TypeMismatchError, "type_mismatch");
CONVEX_DEFINE_ERROR(SessionStateError, "session_state");
CONVEX_DEFINE_ERROR(InvalidPlanError, "invalid_plan");

// Runs every runnable node in topological order until the plan finishes or
// a node waits for the user.
StepOutcome step(Session& session,
                 const OperationRegistry& registry = default_registry());

// Binds the answer of an AwaitingUser node and makes it Ready.
void provide_user_input(Session& session, int node_id, const nlohmann::json& value,
                        const OperationRegistry& registry = default_registry());

// The answer type a waiting node expects.
ValueType expected_input(const Session& session, int node_id,
                         const OperationRegistry& registry = default_registry());

// Snapshot: {"schema_version":1,"kind":"snapshot","session":{...}}. Blob
// payloads travel separately, addressed by sha256.
nlohmann::json pause(Session& session);
Session resume(const nlohmann::json& snapshot,
               std::map<std::string, std::string> blobs);

// Stores the raw upload and returns the value to feed the upload node.
nlohmann::json stage_upload(Session& session, std::string filename, std::string bytes,
                            std::optional<char> delimiter = std::nullopt);

// Resolved table stored in a TableRef artifact.
tabular::Table load_table(const Session& session, const Artifact& artifact);

// Op names of completed nodes, in completion order.
std::vector<std::string> executed_ops(const Session& session);

}  // namespace convex::executor
