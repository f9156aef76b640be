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

#include <string>
#include <vector>

#include "convex/intent/parser.hpp"
#include "convex/planner/plan.hpp"

namespace convex::planner {

struct TemplateNode {
  int id = 0;
  NodeKind kind = NodeKind::AbstractOp;
  std::string op_name;
  nlohmann::json params = nlohmann::json::object();
};

struct PlanTemplate {
  std::string name;
  intent::ActionClass action = intent::ActionClass::Unknown;
  // Distinguishes templates sharing an action, e.g. the plot kind.
  std::string variant;
  MetaPattern pattern = MetaPattern::P2_AnalyticsTask;
  bool requires_dataset = true;
  std::vector<TemplateNode> nodes;
  std::vector<std::pair<int, int>> edges;
};

class TemplateLibrary {
 public:
  static TemplateLibrary from_json_text(std::string_view text,
                                        std::string_view origin = "templates");
  const std::vector<PlanTemplate>& templates() const { return templates_; }
  const PlanTemplate* find(std::string_view name) const;
  const PlanTemplate* find(intent::ActionClass action, std::string_view variant) const;
  // "templates-" followed by the first 12 hex digits of the file's SHA-256.
  const std::string& version() const { return version_; }

 private:
  std::vector<PlanTemplate> templates_;
  std::string version_;
};

TemplateLibrary load_templates(const std::string& path);
const TemplateLibrary& default_templates();

struct PlanContext {
  bool dataset_loaded = false;
};

// Template variant an intent selects within its action.
std::string variant_for(const intent::Intent& intent);

// Instantiates the template for `intent` with params filled from its slots.
Plan compile(const intent::Intent& intent, const PlanContext& context,
             const TemplateLibrary& library = default_templates());

// Instantiates a template by name with no slot filling (for gold plans).
Plan instantiate(const PlanTemplate& tmpl);

// Appends the follow-up's template. Its source nodes read their inputs from
// the most recently completed producer of each kind; a table input with no
// such producer binds to the ingested dataset. Only transforms and concrete
// user actions count as table producers.
Plan merge_followup(const Plan& plan, const intent::Intent& intent,
                    const PlanContext& context,
                    const TemplateLibrary& library = default_templates());

}  // namespace convex::planner
