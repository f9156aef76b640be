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

#include "convex/storyteller/story.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "convex/clustering/pipeline.hpp"
#include "convex/common/text.hpp"
#include "convex/profiler/profiler.hpp"
#include "convex/tabular/ingest.hpp"

namespace convex::storyteller {

namespace {

using executor::Artifact;
using executor::ArtifactKind;
using executor::Session;
using nlohmann::json;

std::string ref(const Artifact& a) {
  return "artifacts/" + a.sha256 + "." + std::string(executor::extension(a.kind));
}

std::string cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

std::string number(const std::optional<double>& v) {
  return v ? format_fixed(*v, 2) : "n/a";
}

const planner::PlanNode* node_of(const Session& s, const Artifact& a) {
  return s.plan ? s.plan->find(a.node_id) : nullptr;
}

std::string op_of(const Session& s, const Artifact& a) {
  const auto* n = node_of(s, a);
  return n ? n->op_name : "";
}

bool descends_from(const Session& s, int node, int ancestor) {
  if (!s.plan) return false;
  std::vector<int> stack{node};
  std::set<int> seen;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    if (cur == ancestor) return true;
    if (!seen.insert(cur).second) continue;
    for (int p : s.plan->predecessors(cur)) stack.push_back(p);
  }
  return false;
}

std::string profile_table(const json& payload) {
  auto profiles = profiler::profiles_from_json(payload.at("profiles"));
  const bool stats = payload.value("description", "statistical") != "structural";
  std::string out = stats ? "| Attribute | Type | Count | Missing | Mean | Std | Min | Median | Max |\n"
                            "|---|---|---|---|---|---|---|---|---|\n"
                          : "| Attribute | Type | Count | Missing |\n|---|---|---|---|\n";
  for (const auto& p : profiles) {
    out += "| " + cell(p.name) + " | " + tabular::to_string(p.dtype) + " | " +
           std::to_string(p.count) + " | " + std::to_string(p.missing) + " |";
    if (stats) {
      if (p.numeric) {
        const auto& n = *p.numeric;
        out += " " + format_fixed(n.mean, 2) + " | " + number(n.sample_std) + " | " +
               format_fixed(n.min, 2) + " | " + format_fixed(n.median, 2) + " | " +
               format_fixed(n.max, 2) + " |";
      } else if (p.text) {
        out += " " + std::to_string(p.text->distinct) + " distinct | | | most frequent: " +
               cell(p.text->modal.value_or("")) + " | |";
      } else {
        out += " | | | | |";
      }
    }
    out += "\n";
  }
  return out;
}

std::string correlation_table(const json& payload) {
  auto m = profiler::correlation_from_json(payload);
  std::string out = "| |";
  std::string rule = "|---|";
  for (const auto& n : m.attribute_names) {
    out += " " + cell(n) + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (size_t i = 0; i < m.attribute_names.size(); ++i) {
    out += "| " + cell(m.attribute_names[i]) + " |";
    for (size_t j = 0; j < m.attribute_names.size(); ++j) out += " " + number(m.r[i][j]) + " |";
    out += "\n";
  }
  return out;
}

// Which rows group together; stands in for a map of the clusters.
std::string membership_table(const clustering::ClusterResult& r) {
  std::vector<std::vector<std::string>> members(r.k);
  for (size_t i = 0; i < r.included_rows.size(); ++i) {
    auto a = r.assignments[r.included_rows[i]];
    if (a && *a < r.k) members[*a].push_back(r.row_labels[i]);
  }
  std::string out = "| Cluster | Size | Members |\n|---|---|---|\n";
  for (size_t c = 0; c < r.k; ++c) {
    out += "| " + std::to_string(c + 1) + " | " + std::to_string(members[c].size()) + " | " +
           cell(join(members[c], ", ")) + " |\n";
  }
  return out;
}

std::string heading_for(const Session& s, const Artifact& a) {
  const std::string op = op_of(s, a);
  switch (a.kind) {
    case ArtifactKind::Profile: return "Profile: " + a.title;
    case ArtifactKind::CorrelationMatrix: return "Correlation";
    case ArtifactKind::ClusterResult: return "Clustering";
    case ArtifactKind::PlotSvg: return "Plot: " + a.title;
    default: break;
  }
  if (op == "prune_correlated") return "Pruning of correlated attributes";
  if (op == "exclude_attributes") return "Attribute exclusion";
  return "Transformation: " + a.title;
}

bool is_analysis(const Artifact& a) {
  return a.kind == ArtifactKind::Profile || a.kind == ArtifactKind::CorrelationMatrix ||
         a.kind == ArtifactKind::ClusterResult || a.kind == ArtifactKind::PlotSvg;
}

}  // namespace

std::string artifact_table(const Artifact& a, const std::string& bytes) {
  switch (a.kind) {
    case ArtifactKind::Profile: return profile_table(json::parse(bytes));
    case ArtifactKind::CorrelationMatrix: return correlation_table(json::parse(bytes));
    case ArtifactKind::ClusterResult:
      return membership_table(clustering::cluster_result_from_json(json::parse(bytes)));
    default: return "";
  }
}

std::vector<std::string> artifact_references(const std::string& markdown) {
  static const std::regex re("artifacts/([0-9a-f]{64})\\.([a-z]+)");
  std::vector<std::string> out;
  for (std::sregex_iterator it(markdown.begin(), markdown.end(), re), end; it != end; ++it) {
    out.push_back(it->str());
  }
  return out;
}

StoryDoc build_story(const Session& s, const MessageCatalog& catalog) {
  std::vector<const Artifact*> visible;
  for (const auto& a : s.artifacts) {
    if (a.visible && a.kind != ArtifactKind::StoryDoc) visible.push_back(&a);
  }
  if (std::none_of(visible.begin(), visible.end(), [](const Artifact* a) { return is_analysis(*a); })) {
    throw EmptySessionError("session " + s.id + " has no completed analysis to tell");
  }

  StoryDoc doc;
  const std::string dataset_name =
      s.dataset ? tabular::file_stem(s.dataset->filename) : std::string("the data");
  doc.title = catalog.render("story.title", {{"dataset", dataset_name}});
  std::string md = "# " + doc.title + "\n\n";

  // Overview
  doc.sections.push_back({"Dataset Overview", {}});
  md += "## Dataset Overview\n\n";
  const Artifact* table = s.dataset && s.dataset->table_artifact
                              ? s.artifact(*s.dataset->table_artifact)
                              : nullptr;
  const Artifact* first_transform = nullptr;
  for (const auto& a : s.artifacts) {
    if (a.kind == ArtifactKind::TableRef && a.meta.contains("report")) {
      first_transform = &a;
      break;
    }
  }
  if (s.dataset && table) {
    const json report = first_transform ? first_transform->meta["report"] : json::object();
    size_t numeric = 0, text = 0;
    if (report.contains("tables") && !report["tables"].empty()) {
      for (const auto& c : report["tables"][0]["columns"]) {
        (c["dtype"] == "Numeric" ? numeric : text) += 1;
      }
    }
    md += catalog.render(
              "story.overview",
              {{"filename", s.dataset->filename},
               {"format", s.dataset->format},
               {"sheets", std::to_string(report.value("sheets_found", size_t{1}))},
               {"transformed", join(report.value("sheets_transformed", std::vector<std::string>{}), ", ")},
               {"rows", std::to_string(table->meta.value("rows", size_t{0}))},
               {"cols", std::to_string(table->meta.value("columns", json::array()).size())},
               {"numeric", std::to_string(numeric)},
               {"text", std::to_string(text)}}) +
          "\n\n";
    md += "Table data: [" + table->id + "](" + ref(*table) + ")\n\n";
    doc.sections.back().artifact_ids.push_back(table->id);
  } else {
    md += "No data collection was uploaded.\n\n";
  }

  // Analyses, grouped so that plots follow the analysis they depict.
  std::vector<std::string> attributes;
  std::optional<clustering::ClusterResult> last_cluster;
  std::vector<std::string> pruned;
  int section_node = 0;
  for (const Artifact* a : visible) {
    if (a->kind == ArtifactKind::TableRef && first_transform && a->id == first_transform->id) {
      continue;
    }
    const bool attach = a->kind == ArtifactKind::PlotSvg && section_node != 0 &&
                        descends_from(s, a->node_id, section_node);
    if (!attach) {
      doc.sections.push_back({heading_for(s, *a), {}});
      md += "## " + doc.sections.back().heading + "\n\n";
      section_node = a->node_id;
    }
    doc.sections.back().artifact_ids.push_back(a->id);
    md += a->explanation + "\n\n";
    const std::string& bytes = s.payload(*a);
    switch (a->kind) {
      case ArtifactKind::PlotSvg:
        md += "![" + cell(a->title) + " (" + a->id + ")](" + ref(*a) + ")\n\n";
        continue;
      case ArtifactKind::Profile: {
        json p = json::parse(bytes);
        md += profile_table(p) + "\n";
        if (attributes.empty()) {
          for (const auto& c : p["profiles"]["columns"]) attributes.push_back(c["name"].get<std::string>());
        }
        break;
      }
      case ArtifactKind::CorrelationMatrix: {
        json p = json::parse(bytes);
        md += correlation_table(p) + "\n";
        break;
      }
      case ArtifactKind::ClusterResult: {
        last_cluster = clustering::cluster_result_from_json(json::parse(bytes));
        md += membership_table(*last_cluster) + "\n";
        for (const auto& d : last_cluster->pruning.dropped) pruned.push_back(d.name);
        break;
      }
      default:
        if (a->meta.contains("pruning")) {
          for (const auto& d : a->meta["pruning"]["dropped"]) pruned.push_back(d["name"]);
        }
        break;
    }
    md += "Data: [" + a->id + "](" + ref(*a) + ")\n\n";
  }

  // Timeline
  doc.sections.push_back({"Conversation Timeline", {}});
  md += "## Conversation Timeline\n\n";
  for (const auto& t : s.turns) {
    md += std::to_string(t.index + 1) + ". **" +
          (t.speaker == executor::Speaker::User ? "User" : "Bot") + "**";
    if (t.pattern) md += " [" + std::string(planner::to_string(*t.pattern)).substr(0, 2) + "]";
    md += ": " + cell(t.text);
    if (!t.artifacts.empty()) md += " (" + join(t.artifacts, ", ") + ")";
    if (t.feedback) md += t.feedback == intent::Rating::Like ? " (liked)" : " (disliked)";
    md += "\n";
  }
  md += "\n";

  // Conclusions
  doc.sections.push_back({"Conclusions", {}});
  md += "## Conclusions\n\n";
  if (attributes.empty() && table) {
    attributes = table->meta.value("columns", std::vector<std::string>{});
  }
  md += "- " + catalog.render("story.conclusion.attributes", {{"attributes", join(attributes, ", ")}}) + "\n";
  if (last_cluster) {
    md += "- " + catalog.render("story.conclusion.k",
                                {{"k", std::to_string(last_cluster->k)},
                                 {"features", join(last_cluster->features_used, ", ")}}) +
          "\n";
  }
  std::vector<std::string> unique_pruned;
  for (const auto& p : pruned) {
    if (std::find(unique_pruned.begin(), unique_pruned.end(), p) == unique_pruned.end()) {
      unique_pruned.push_back(p);
    }
  }
  md += "- " + (unique_pruned.empty()
                    ? catalog.text("story.conclusion.pruned.none")
                    : catalog.render("story.conclusion.pruned", {{"pruned", join(unique_pruned, ", ")}})) +
        "\n";
  size_t likes = 0, dislikes = 0;
  for (const auto& t : s.turns) {
    if (t.feedback) (*t.feedback == intent::Rating::Like ? likes : dislikes) += 1;
  }
  md += "- " + catalog.render("story.conclusion.feedback",
                              {{"likes", std::to_string(likes)}, {"dislikes", std::to_string(dislikes)}}) +
        "\n";
  doc.markdown = std::move(md);
  return doc;
}

}  // namespace convex::storyteller
