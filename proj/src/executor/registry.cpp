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

#include "convex/executor/registry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "convex/clustering/projection.hpp"
#include "convex/common/text.hpp"
#include "convex/storyteller/plot.hpp"
#include "convex/tabular/csv.hpp"
#include "convex/tabular/ingest.hpp"

namespace convex::executor {

namespace {

using nlohmann::json;

constexpr std::pair<ValueType, const char*> kValueTypes[] = {
    {ValueType::None, "none"},     {ValueType::String, "string"},
    {ValueType::Number, "number"}, {ValueType::Object, "object"},
    {ValueType::Sheets, "sheets"},
};

std::string fmt2(double v) { return format_fixed(v, 2); }

const tabular::Table& need_table(const OpContext& ctx) {
  if (!ctx.table) throw Error("missing_input", "no table is available");
  return *ctx.table;
}

tabular::SheetSelection selection_from_json(const json& v) {
  if (v.is_null()) return tabular::SheetSelection::all();
  if (v.is_string()) return tabular::SheetSelection::parse(v.get<std::string>());
  return tabular::SheetSelection::only(v.get<std::vector<std::string>>());
}

std::string format_name(const std::string& format) {
  if (format == "workbook_bundle") return "a workbook";
  if (format == "tsv") return "a TSV file";
  return "a CSV file";
}

tabular::IngestOptions ingest_options(const RawDataset& raw) {
  tabular::IngestOptions opts;
  opts.delimiter = raw.delimiter;
  return opts;
}

OpResult transform_sheets(OpContext& ctx, bool may_ask) {
  if (!ctx.dataset) throw Error("missing_input", "no data collection was uploaded");
  const RawDataset& raw = *ctx.dataset;
  const auto opts = ingest_options(raw);
  const json sheets = ctx.params.value("sheets", json(nullptr));
  if (sheets.is_null() && may_ask) {
    auto names = tabular::list_sheets(raw.bytes, raw.filename, opts);
    if (names.size() > 1) {
      AwaitRequest ask;
      ask.key = "ask.sheets";
      ask.param = "sheets";
      ask.type = ValueType::Sheets;
      ask.default_answer = "all";
      ask.vars = {{"n", std::to_string(names.size())},
                  {"names", join(names, ", ")},
                  {"format_name", format_name(tabular::to_string(
                                      tabular::detect_format(raw.bytes, raw.filename)))}};
      return {{}, ask};
    }
  }
  auto report = tabular::ingest(raw.bytes, raw.filename, selection_from_json(sheets), opts);
  OpResult out;
  json report_json = tabular::to_json(report);
  for (size_t i = 0; i < report.tables.size(); ++i) {
    const auto& t = report.tables[i];
    NewArtifact a;
    a.kind = ArtifactKind::TableRef;
    a.bytes = tabular::serialize_csv(t);
    a.title = "Table " + t.name();
    a.vars = {{"sheet", report.sheets_transformed[i]},
              {"rows", std::to_string(t.n_rows())},
              {"cols", std::to_string(t.n_cols())}};
    a.meta = {{"table_name", t.name()}, {"rows", t.n_rows()}, {"columns", t.column_names()}};
    if (i == 0) a.meta["report"] = report_json;
    out.artifacts.push_back(std::move(a));
  }
  return out;
}

std::map<std::string, std::string> table_vars(const tabular::Table& t) {
  size_t numeric = 0;
  for (const auto& c : t.columns()) numeric += c.is_numeric() ? 1 : 0;
  return {{"table", t.name()},
          {"rows", std::to_string(t.n_rows())},
          {"cols", std::to_string(t.n_cols())},
          {"numeric", std::to_string(numeric)},
          {"text", std::to_string(t.n_cols() - numeric)}};
}

NewArtifact table_artifact(const tabular::Table& t, std::string title, bool visible) {
  NewArtifact a;
  a.kind = ArtifactKind::TableRef;
  a.bytes = tabular::serialize_csv(t);
  a.title = std::move(title);
  a.visible = visible;
  a.vars = table_vars(t);
  a.meta = {{"table_name", t.name()}, {"rows", t.n_rows()}, {"columns", t.column_names()}};
  return a;
}

NewArtifact plot_artifact(const storyteller::PlotSpec& spec, std::string plot_kind) {
  NewArtifact a;
  a.kind = ArtifactKind::PlotSvg;
  a.bytes = storyteller::render_plot(spec);
  a.title = spec.title;
  a.meta = {{"plot_kind", std::move(plot_kind)}};
  return a;
}

OpResult op_profile(OpContext& ctx) {
  const auto& t = need_table(ctx);
  std::string description = ctx.params.value("description", "statistical");
  if (description != "statistical" && description != "structural" && description != "both") {
    throw Error("invalid_param", "description must be statistical, structural or both");
  }
  json payload = {{"schema_version", 1},
                  {"table", t.name()},
                  {"rows", t.n_rows()},
                  {"description", description},
                  {"profiles", profiler::to_json(profiler::profile(t))}};
  NewArtifact a;
  a.kind = ArtifactKind::Profile;
  a.bytes = payload.dump(2);
  a.title = (description == "structural" ? "Structure of " : "Description of ") + t.name();
  a.key = "explain.profile." + description;
  a.vars = table_vars(t);
  a.meta = {{"description", description}, {"table_name", t.name()}};
  return {{std::move(a)}, std::nullopt};
}

OpResult op_numeric_view(OpContext& ctx) {
  auto view = tabular::numeric_view(need_table(ctx));
  return {{table_artifact(view, "Numeric attributes of " + view.name(), false)}, std::nullopt};
}

OpResult op_correlation(OpContext& ctx) {
  const auto& t = need_table(ctx);
  auto m = profiler::correlation_matrix(t);
  NewArtifact a;
  a.kind = ArtifactKind::CorrelationMatrix;
  a.bytes = profiler::to_json(m).dump(2);
  a.title = "Correlation matrix";
  a.vars = {{"n", std::to_string(m.attribute_names.size())}};
  std::optional<std::tuple<double, size_t, size_t>> best;
  for (size_t i = 0; i < m.r.size(); ++i) {
    for (size_t j = i + 1; j < m.r.size(); ++j) {
      if (m.r[i][j] && (!best || std::abs(*m.r[i][j]) > std::abs(std::get<0>(*best)))) {
        best = std::make_tuple(*m.r[i][j], i, j);
      }
    }
  }
  if (best) {
    auto [r, i, j] = *best;
    a.vars["a"] = m.attribute_names[i];
    a.vars["b"] = m.attribute_names[j];
    a.vars["r"] = fmt2(r);
  } else {
    a.key = "explain.correlation_matrix.none";
  }
  a.meta = {{"attributes", m.attribute_names}, {"table_name", t.name()}};
  return {{std::move(a)}, std::nullopt};
}

OpResult op_heatmap(OpContext& ctx) {
  if (!ctx.correlation) throw Error("missing_input", "no correlation matrix is available");
  storyteller::PlotSpec spec;
  spec.kind = storyteller::PlotKind::Heatmap;
  spec.title = "Correlation heatmap";
  spec.caption = "Pearson coefficient for each couple of numerical attributes.";
  spec.labels = ctx.correlation->attribute_names;
  spec.matrix = ctx.correlation->r;
  return {{plot_artifact(spec, "heatmap")}, std::nullopt};
}

OpResult op_prune(OpContext& ctx) {
  const auto& t = need_table(ctx);
  double threshold = ctx.params.value("threshold", 0.95);
  auto result = profiler::prune_correlated(t, threshold);
  std::vector<std::string> dropped;
  for (const auto& d : result.dropped) {
    dropped.push_back(d.name + " (r = " + fmt2(d.r) + " with " + d.culprit + ")");
  }
  std::vector<std::string> names;
  for (const auto& d : result.dropped) names.push_back(d.name);
  auto kept = t.without(names);
  auto a = table_artifact(kept, "Attributes kept after pruning", true);
  a.vars["threshold"] = fmt2(threshold);
  a.vars["dropped"] = join(dropped, ", ");
  if (dropped.empty()) a.key = "explain.prune_correlated.none";
  a.meta["pruning"] = profiler::to_json(result);
  return {{std::move(a)}, std::nullopt};
}

OpResult op_cluster(OpContext& ctx) {
  const auto& t = need_table(ctx);
  clustering::ClusteringConfig cfg;
  const json& p = ctx.params;
  if (p.contains("k") && !p["k"].is_null()) cfg.k = p["k"].get<size_t>();
  cfg.k_min = p.value("k_min", cfg.k_min);
  cfg.k_max = p.value("k_max", cfg.k_max);
  cfg.restarts = p.value("restarts", cfg.restarts);
  cfg.max_iterations = p.value("max_iterations", cfg.max_iterations);
  cfg.standardize = p.value("standardize", cfg.standardize);
  cfg.correlation_prune_threshold = p.value("prune_threshold", cfg.correlation_prune_threshold);
  cfg.seed = p.contains("seed") && !p["seed"].is_null() ? p["seed"].get<uint64_t>()
                                                        : ctx.session.seed;
  auto r = clustering::cluster_table(t, cfg);
  NewArtifact a;
  a.kind = ArtifactKind::ClusterResult;
  a.bytes = clustering::to_json(r).dump(2);
  a.title = "Clustering into " + std::to_string(r.k) + " groups";
  a.key = r.auto_k ? "explain.cluster" : "explain.cluster.fixed";
  a.vars = {{"k", std::to_string(r.k)}, {"features", join(r.features_used, ", ")}};
  std::vector<std::string> pruned;
  for (const auto& d : r.pruning.dropped) pruned.push_back(d.name);
  a.meta = {{"k", r.k},
            {"auto_k", r.auto_k},
            {"features_used", r.features_used},
            {"pruned", pruned},
            {"seed", cfg.seed}};
  return {{std::move(a)}, std::nullopt};
}

const clustering::ClusterResult& need_cluster(const OpContext& ctx) {
  if (!ctx.cluster) throw Error("missing_input", "no clustering result is available");
  return *ctx.cluster;
}

OpResult op_elbow(OpContext& ctx) {
  const auto& r = need_cluster(ctx);
  storyteller::PlotSpec spec;
  spec.kind = storyteller::PlotKind::ElbowCurve;
  spec.title = "Elbow curve";
  spec.x_label = "number of clusters k";
  spec.y_label = "within-cluster sum of squares";
  spec.caption = "WCSS by number of clusters; the marker shows the chosen k.";
  spec.wcss_by_k = r.wcss_by_k;
  spec.chosen_k = r.k;
  auto a = plot_artifact(spec, "elbow");
  a.vars = {{"k", std::to_string(r.k)}};
  return {{std::move(a)}, std::nullopt};
}

OpResult op_projection(OpContext& ctx) {
  const auto& r = need_cluster(ctx);
  auto proj = clustering::project_2d(r.analysis_points, r.analysis_centroids);
  storyteller::PlotSpec spec;
  spec.kind = storyteller::PlotKind::ClusterScatter2D;
  spec.title = "Clusters on the two main components";
  spec.caption = "Rows projected on the first two principal components, coloured by cluster.";
  spec.points = proj.points;
  spec.centroid_points = proj.centroid_points;
  spec.explained = proj.explained_variance_ratio;
  for (size_t row : r.included_rows) spec.assignments.push_back(r.assignments[row].value_or(0));
  auto a = plot_artifact(spec, "scatter");
  a.vars = {{"variance", format_fixed(100.0 * (proj.explained_variance_ratio[0] +
                                               proj.explained_variance_ratio[1]),
                                      1)}};
  return {{std::move(a)}, std::nullopt};
}

OpResult op_centroids(OpContext& ctx) {
  const auto& r = need_cluster(ctx);
  storyteller::PlotSpec spec;
  spec.kind = storyteller::PlotKind::CentroidBars;
  spec.title = "Cluster centroids";
  spec.caption = "Mean of each attribute per cluster with one standard deviation.";
  spec.features = r.features_used;
  spec.centroids = r.centroids;
  spec.stds = r.per_cluster_std;
  return {{plot_artifact(spec, "centroids")}, std::nullopt};
}

OpResult op_histograms(OpContext& ctx) {
  const auto& t = need_table(ctx);
  auto wanted = ctx.params.value("attributes", std::vector<std::string>{});
  storyteller::PlotSpec spec;
  spec.kind = storyteller::PlotKind::Histogram;
  spec.title = "Histograms";
  spec.caption = "Distribution of each numeric attribute.";
  spec.bins = ctx.params.value("bins", size_t{10});
  for (const auto& c : t.columns()) {
    if (!c.is_numeric()) continue;
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name()) == wanted.end()) {
      continue;
    }
    storyteller::HistogramSeries s{c.name(), {}};
    for (const auto& v : c.numbers()) {
      if (v) s.values.push_back(*v);
    }
    if (!s.values.empty()) spec.series.push_back(std::move(s));
  }
  auto a = plot_artifact(spec, "histogram");
  a.vars = {{"n", std::to_string(spec.series.size())}, {"bins", std::to_string(spec.bins)}};
  return {{std::move(a)}, std::nullopt};
}

OpResult op_exclude(OpContext& ctx) {
  const auto& t = need_table(ctx);
  auto names = ctx.params.value("attributes", std::vector<std::string>{});
  if (names.empty()) throw Error("invalid_param", "no attribute to exclude was named");
  for (const auto& n : names) {
    if (!t.find(n)) throw Error("unknown_attribute", "the table has no attribute '" + n + "'");
  }
  auto a = table_artifact(t.without(names), "Table without " + join(names, ", "), true);
  a.vars["attributes"] = join(names, ", ");
  return {{std::move(a)}, std::nullopt};
}

OpResult op_upload(OpContext& ctx) {
  const json& v = ctx.params.at("value");
  Dataset d;
  d.filename = v.at("filename").get<std::string>();
  d.blob = v.at("blob").get<std::string>();
  if (v.contains("delimiter") && v["delimiter"].is_string()) {
    d.delimiter = v["delimiter"].get<std::string>().at(0);
  }
  const std::string& bytes = ctx.session.blobs.at(d.blob);
  d.format = tabular::to_string(tabular::detect_format(bytes, d.filename));
  tabular::IngestOptions opts;
  opts.delimiter = d.delimiter;
  d.sheet_names = tabular::list_sheets(bytes, d.filename, opts);
  ctx.session.dataset = std::move(d);
  return {};
}

}  // namespace

std::string_view to_string(ValueType t) {
  for (const auto& [v, n] : kValueTypes) {
    if (v == t) return n;
  }
  return "none";
}

std::optional<ValueType> value_type_from_string(std::string_view s) {
  for (const auto& [v, n] : kValueTypes) {
    if (s == n) return v;
  }
  return std::nullopt;
}

void OperationRegistry::add(OpEntry entry) {
  std::string name = entry.name;
  entries_[name] = std::move(entry);
}

const OpEntry* OperationRegistry::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

OperationRegistry OperationRegistry::without(std::string_view name) const {
  OperationRegistry copy = *this;
  auto it = copy.entries_.find(name);
  if (it != copy.entries_.end()) copy.entries_.erase(it);
  return copy;
}

std::vector<std::string> OperationRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, e] : entries_) out.push_back(n);
  return out;
}

OperationRegistry make_default_registry(const MessageCatalog& catalog) {
  OperationRegistry r(catalog);
  auto op = [&](std::string name, OpImpl impl) {
    OpEntry e;
    e.explanation = "explain." + name;
    e.name = std::move(name);
    e.impl = std::move(impl);
    r.add(std::move(e));
  };
  OpEntry request_upload;
  request_upload.name = "request_upload";
  request_upload.question = "ask.upload";
  r.add(request_upload);

  OpEntry upload;
  upload.name = "upload";
  upload.impl = op_upload;
  upload.asks = true;
  upload.blocking = true;
  upload.accepts = ValueType::Object;
  r.add(upload);

  OpEntry describe;
  describe.name = "choose_description";
  describe.question = "ask.description";
  describe.asks = true;
  describe.accepts = ValueType::String;
  describe.allowed = {"statistical", "structural", "both"};
  describe.default_answer = "statistical";
  r.add(describe);

  OpEntry feedback;
  feedback.name = "request_feedback";
  feedback.question = "ask.feedback";
  feedback.asks = true;
  feedback.accepts = ValueType::String;
  feedback.allowed = {"like", "dislike", "none"};
  feedback.default_answer = "none";
  r.add(feedback);

  op("transform", [](OpContext& c) { return transform_sheets(c, true); });
  op("select_sheet", [](OpContext& c) { return transform_sheets(c, false); });
  op("profile", op_profile);
  op("numeric_view", op_numeric_view);
  op("correlation_matrix", op_correlation);
  op("plot_heatmap", op_heatmap);
  op("prune_correlated", op_prune);
  op("cluster", op_cluster);
  op("plot_elbow", op_elbow);
  op("plot_projection", op_projection);
  op("plot_centroids", op_centroids);
  op("plot_histograms", op_histograms);
  op("exclude_attributes", op_exclude);
  return r;
}

const OperationRegistry& default_registry() {
  static const OperationRegistry registry = make_default_registry(default_catalog());
  return registry;
}

}  // namespace convex::executor
