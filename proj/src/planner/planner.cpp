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

#include "convex/planner/planner.hpp"

#include <algorithm>

#include "convex/common/digest.hpp"
#include "convex/common/files.hpp"

namespace convex::planner {

using intent::ActionClass;

namespace {

nlohmann::json selector_json(const tabular::SheetSelection& s) {
  switch (s.mode) {
    case tabular::SheetSelection::Mode::All: return "all";
    case tabular::SheetSelection::Mode::First: return "first";
    case tabular::SheetSelection::Mode::Names: return s.names;
  }
  return "all";
}

void apply_slots(PlanNode& n, const intent::Slots& s) {
  const auto& op = n.op_name;
  if ((op == "transform" || op == "select_sheet") && s.sheet_selector) {
    n.params["sheets"] = selector_json(*s.sheet_selector);
  }
  if (op == "profile" && s.description) n.params["description"] = *s.description;
  if (op == "prune_correlated" && s.threshold_hint) n.params["threshold"] = *s.threshold_hint;
  if (op == "cluster") {
    if (s.k_hint) n.params["k"] = *s.k_hint;
    if (s.threshold_hint) n.params["prune_threshold"] = *s.threshold_hint;
  }
  if ((op == "exclude_attributes" || op == "plot_histograms") && !s.attribute_names.empty()) {
    n.params["attributes"] = s.attribute_names;
  }
}

const PlanTemplate& pick(const intent::Intent& intent, const PlanContext& context,
                         const TemplateLibrary& library) {
  if (intent.action == ActionClass::Unknown) {
    throw NoTemplateError("the request was not understood");
  }
  if (intent.action == ActionClass::ExcludeAttribute && intent.slots.attribute_names.empty() &&
      !intent.slots.threshold_hint) {
    throw NoTemplateError("no attribute to exclude was named");
  }
  const std::string variant = variant_for(intent);
  const PlanTemplate* t = library.find(intent.action, variant);
  if (!t) {
    throw NoTemplateError("no plan template for " + std::string(to_string(intent.action)) +
                          (variant.empty() ? "" : " (" + variant + ")"));
  }
  if (t->requires_dataset && !context.dataset_loaded) {
    throw NoTemplateError(std::string(to_string(intent.action)) + " needs a dataset; none is loaded");
  }
  return *t;
}

std::vector<int> sources(const Plan& p) {
  std::vector<int> out;
  for (const auto& n : p.nodes) {
    if (p.predecessors(n.id).empty()) out.push_back(n.id);
  }
  return out;
}

}  // namespace

TemplateLibrary TemplateLibrary::from_json_text(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  TemplateLibrary lib;
  lib.version_ = "templates-" + sha256_hex(text).substr(0, 12);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw TemplateSchemaError(where + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  try {
    if (doc.at("schema_version").get<int>() != 1) {
      throw TemplateSchemaError(where + ": unsupported schema_version");
    }
    for (const auto& t : doc.at("templates")) {
      PlanTemplate pt;
      pt.name = t.at("name").get<std::string>();
      auto fail = [&](const std::string& msg) {
        throw TemplateSchemaError(where + ": template '" + pt.name + "': " + msg);
      };
      auto action = intent::action_from_string(t.at("action").get<std::string>());
      if (!action) fail("unknown action");
      pt.action = *action;
      pt.variant = t.value("variant", "");
      auto pattern = pattern_from_string(t.at("pattern").get<std::string>());
      if (!pattern) fail("unknown pattern");
      pt.pattern = *pattern;
      pt.requires_dataset = t.value("requires_dataset", true);
      for (const auto& n : t.at("nodes")) {
        TemplateNode tn;
        tn.id = n.at("id").get<int>();
        auto kind = node_kind_from_string(n.at("kind").get<std::string>());
        if (!kind) fail("unknown node kind");
        tn.kind = *kind;
        tn.op_name = n.at("op").get<std::string>();
        if (!find_op(tn.op_name)) fail("unknown operation '" + tn.op_name + "'");
        tn.params = n.value("params", nlohmann::json::object());
        if (!tn.params.is_object()) fail("params must be an object");
        pt.nodes.push_back(std::move(tn));
      }
      for (const auto& e : t.at("edges")) {
        pt.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      }
      if (lib.find(pt.name)) fail("duplicate template name");
      if (lib.find(pt.action, pt.variant)) fail("duplicate (action, variant)");
      lib.templates_.push_back(std::move(pt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw TemplateSchemaError(where + ": " + e.what());
  }
  return lib;
}

const PlanTemplate* TemplateLibrary::find(std::string_view name) const {
  for (const auto& t : templates_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const PlanTemplate* TemplateLibrary::find(ActionClass action, std::string_view variant) const {
  for (const auto& t : templates_) {
    if (t.action == action && t.variant == variant) return &t;
  }
  return nullptr;
}

TemplateLibrary load_templates(const std::string& path) {
  return TemplateLibrary::from_json_text(read_file(path), path);
}

const TemplateLibrary& default_templates() {
  static const TemplateLibrary lib = load_templates(data_dir() + "/templates.json");
  return lib;
}

std::string variant_for(const intent::Intent& intent) {
  if (intent.action == ActionClass::PlotRequest) {
    return intent.slots.plot_kind.value_or("histogram");
  }
  if (intent.action == ActionClass::ExcludeAttribute) {
    return intent.slots.attribute_names.empty() && intent.slots.threshold_hint ? "threshold"
                                                                               : "attributes";
  }
  return "";
}

Plan instantiate(const PlanTemplate& tmpl) {
  Plan p;
  p.origin_pattern = tmpl.pattern;
  p.template_name = tmpl.name;
  for (const auto& tn : tmpl.nodes) {
    PlanNode n;
    n.id = tn.id;
    n.kind = tn.kind;
    n.op_name = tn.op_name;
    n.params = tn.params;
    p.nodes.push_back(std::move(n));
  }
  std::sort(p.nodes.begin(), p.nodes.end(),
            [](const PlanNode& a, const PlanNode& b) { return a.id < b.id; });
  p.edges = tmpl.edges;
  return p;
}

Plan compile(const intent::Intent& intent, const PlanContext& context,
             const TemplateLibrary& library) {
  const PlanTemplate& t = pick(intent, context, library);
  Plan p = instantiate(t);
  for (auto& n : p.nodes) apply_slots(n, intent.slots);
  for (int id : sources(p)) {
    PlanNode& n = *p.find(id);
    for (DataKind k : find_op(n.op_name)->inputs) {
      if (k == DataKind::Table || k == DataKind::Dataset) {
        n.params["bind"] = "dataset";
      } else {
        throw NoTemplateError(n.op_name + " needs a " + std::string(to_string(k)) +
                              " that has not been computed yet");
      }
    }
  }
  return p;
}

namespace {

// Tables a follow-up may read: the transformed data and the results of
// explicit user actions, not intermediate views inside an analysis.
bool working_table(const PlanNode& n) {
  return n.kind == NodeKind::ConcreteOp || n.op_name == "transform";
}

}  // namespace

Plan merge_followup(const Plan& plan, const intent::Intent& intent, const PlanContext& context,
                    const TemplateLibrary& library) {
  const PlanTemplate& t = pick(intent, context, library);
  Plan add = instantiate(t);
  for (auto& n : add.nodes) apply_slots(n, intent.slots);

  const int offset = plan.max_id();
  Plan out = plan;
  std::vector<std::pair<int, int>> wiring;
  for (int src : sources(add)) {
    const PlanNode& n = *add.find(src);
    for (DataKind k : find_op(n.op_name)->inputs) {
      const PlanNode* latest = nullptr;
      for (const auto& existing : plan.nodes) {
        const OpSpec* spec = find_op(existing.op_name);
        if (existing.state == NodeState::Completed && spec && spec->output == k &&
            (k != DataKind::Table || working_table(existing)) &&
            (!latest || existing.completed_seq > latest->completed_seq)) {
          latest = &existing;
        }
      }
      if (latest) {
        wiring.emplace_back(latest->id, src + offset);
      } else if (k == DataKind::Table || k == DataKind::Dataset) {
        add.find(src)->params["bind"] = "dataset";
      } else {
        throw NoTemplateError(n.op_name + " needs a " + std::string(to_string(k)) +
                              " that has not been computed yet");
      }
    }
  }
  for (auto& n : add.nodes) {
    n.id += offset;
    out.nodes.push_back(std::move(n));
  }
  for (const auto& [a, b] : add.edges) out.edges.emplace_back(a + offset, b + offset);
  for (const auto& e : wiring) out.edges.push_back(e);
  out.merged_templates.push_back(t.name);
  return out;
}

}  // namespace convex::planner
