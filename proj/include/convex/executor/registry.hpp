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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex/clustering/pipeline.hpp"
#include "convex/common/catalog.hpp"
#include "convex/executor/session.hpp"
#include "convex/planner/plan.hpp"
#include "convex/profiler/profiler.hpp"
#include "convex/tabular/table.hpp"

namespace convex::executor {

struct RawDataset {
  std::string filename;
  std::string bytes;
  std::optional<char> delimiter;
};

// What an operation sees when it runs.
struct OpContext {
  Session& session;
  const planner::PlanNode& node;
  nlohmann::json params;
  std::optional<tabular::Table> table;
  std::optional<RawDataset> dataset;
  std::optional<profiler::CorrelationMatrix> correlation;
  std::optional<clustering::ClusterResult> cluster;
};

struct NewArtifact {
  ArtifactKind kind = ArtifactKind::TableRef;
  std::string bytes;
  std::string title;
  // Catalog key of the explanation; empty uses the op's own key.
  std::string key;
  // Slot values for the registry's explanation template.
  std::map<std::string, std::string> vars;
  bool visible = true;
  nlohmann::json meta = nlohmann::json::object();
};

enum class ValueType { None, String, Number, Object, Sheets };

std::string_view to_string(ValueType t);
std::optional<ValueType> value_type_from_string(std::string_view s);

struct AwaitRequest {
  std::string key;    // message catalog key of the question
  std::string param;  // node param the answer fills
  ValueType type = ValueType::String;
  std::optional<nlohmann::json> default_answer;
  std::map<std::string, std::string> vars;
};

struct OpResult {
  std::vector<NewArtifact> artifacts;
  std::optional<AwaitRequest> await;
};

using OpImpl = std::function<OpResult(OpContext&)>;

struct OpEntry {
  std::string name;
  // For nodes that ask, runs once the answer is bound. May be empty.
  OpImpl impl;
  std::string explanation;  // catalog key
  // Catalog key of the question (asking nodes) or message (bot requests).
  std::string question;
  // Bot requests and user actions that wait for an answer.
  bool asks = false;
  bool blocking = false;
  ValueType accepts = ValueType::None;
  std::vector<std::string> allowed;  // for String answers, when restricted
  // Answer used when the user moves on without replying.
  std::optional<nlohmann::json> default_answer;
};

class OperationRegistry {
 public:
  explicit OperationRegistry(const MessageCatalog& catalog) : catalog_(&catalog) {}
  const MessageCatalog& catalog() const { return *catalog_; }

  void add(OpEntry entry);
  const OpEntry* find(std::string_view name) const;
  OperationRegistry without(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  const MessageCatalog* catalog_;
  std::map<std::string, OpEntry, std::less<>> entries_;
};

// Every shipped op except classify_alternate, explained from `catalog`.
OperationRegistry make_default_registry(const MessageCatalog& catalog);
const OperationRegistry& default_registry();

}  // namespace convex::executor
