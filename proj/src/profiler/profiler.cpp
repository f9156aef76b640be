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

#include "convex/profiler/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace convex::profiler {

using tabular::Column;
using tabular::DType;
using tabular::Table;

double quantile_sorted(std::span<const double> sorted, double p) {
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

namespace {

NumericSummary summarize(std::vector<double> values) {
  NumericSummary s;
  const double n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() >= 2) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sample_std = std::sqrt(ss / (n - 1.0));
  }
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  return s;
}

TextSummary summarize_text(const std::vector<std::optional<std::string>>& cells) {
  TextSummary s;
  std::map<std::string, size_t> counts;
  std::vector<std::string> order;
  for (const auto& c : cells) {
    if (!c) continue;
    if (counts[*c]++ == 0) order.push_back(*c);
  }
  s.distinct = counts.size();
  for (const auto& v : order) {
    if (counts[v] > s.modal_frequency) {
      s.modal_frequency = counts[v];
      s.modal = v;
    }
  }
  return s;
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::vector<ColumnProfile> profile(const Table& table) {
  std::vector<ColumnProfile> out;
  for (const auto& col : table.columns()) {
    ColumnProfile p;
    p.name = col.name();
    p.dtype = col.dtype();
    p.missing = col.missing_count();
    p.count = col.size() - p.missing;
    if (col.is_numeric()) {
      std::vector<double> values;
      for (const auto& v : col.numbers()) {
        if (v) values.push_back(*v);
      }
      if (!values.empty()) p.numeric = summarize(std::move(values));
    } else {
      p.text = summarize_text(col.texts());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  const size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::optional<double> pearson_pairwise(const Column& a, const Column& b) {
  const auto& xa = a.numbers();
  const auto& xb = b.numbers();
  std::vector<double> x, y;
  for (size_t i = 0; i < xa.size() && i < xb.size(); ++i) {
    if (xa[i] && xb[i]) {
      x.push_back(*xa[i]);
      y.push_back(*xb[i]);
    }
  }
  return pearson(x, y);
}

std::optional<double> CorrelationMatrix::at(const std::string& a,
                                            const std::string& b) const {
  auto ia = std::find(attribute_names.begin(), attribute_names.end(), a);
  auto ib = std::find(attribute_names.begin(), attribute_names.end(), b);
  if (ia == attribute_names.end() || ib == attribute_names.end()) {
    return std::nullopt;
  }
  return r[ia - attribute_names.begin()][ib - attribute_names.begin()];
}

CorrelationMatrix correlation_matrix(const Table& table) {
  std::vector<const Column*> cols;
  for (const auto& c : table.columns()) {
    if (c.is_numeric()) cols.push_back(&c);
  }
  if (cols.size() < 2) {
    throw NotEnoughNumericColumnsError(
        "correlation needs at least 2 numeric columns, found " +
        std::to_string(cols.size()));
  }
  CorrelationMatrix m;
  const size_t d = cols.size();
  m.r.assign(d, std::vector<std::optional<double>>(d));
  for (size_t i = 0; i < d; ++i) {
    m.attribute_names.push_back(cols[i]->name());
    // The diagonal is 1 exactly when the column has variance.
    if (pearson_pairwise(*cols[i], *cols[i])) m.r[i][i] = 1.0;
    for (size_t j = i + 1; j < d; ++j) {
      auto r = pearson_pairwise(*cols[i], *cols[j]);
      m.r[i][j] = r;
      m.r[j][i] = r;
    }
  }
  return m;
}

PruningResult prune_correlated(const Table& table, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidThresholdError("threshold must be in (0, 1]");
  }
  PruningResult result;
  result.threshold = threshold;
  std::vector<const Column*> kept;
  for (const auto& col : table.columns()) {
    if (!col.is_numeric()) continue;
    std::optional<DroppedAttribute> drop;
    for (const Column* k : kept) {
      auto r = pearson_pairwise(*k, col);
      if (r && std::abs(*r) > threshold) {
        drop = DroppedAttribute{col.name(), k->name(), *r};
        break;
      }
    }
    if (drop) {
      result.dropped.push_back(*drop);
    } else {
      kept.push_back(&col);
      result.kept.push_back(col.name());
    }
  }
  return result;
}

nlohmann::json to_json(const ColumnProfile& p) {
  nlohmann::json j{{"name", p.name},
                   {"dtype", tabular::to_string(p.dtype)},
                   {"count", p.count},
                   {"missing", p.missing}};
  if (p.numeric) {
    const auto& s = *p.numeric;
    j["numeric"] = {{"mean", s.mean},     {"sample_std", opt(s.sample_std)},
                    {"min", s.min},       {"q1", s.q1},
                    {"median", s.median}, {"q3", s.q3},
                    {"max", s.max}};
  }
  if (p.text) {
    j["text"] = {{"distinct", p.text->distinct},
                 {"modal", p.text->modal ? nlohmann::json(*p.text->modal)
                                         : nlohmann::json(nullptr)},
                 {"modal_frequency", p.text->modal_frequency}};
  }
  return j;
}

nlohmann::json to_json(const std::vector<ColumnProfile>& profiles) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& p : profiles) cols.push_back(to_json(p));
  return {{"columns", cols}};
}

nlohmann::json to_json(const CorrelationMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m.r) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& v : row) jr.push_back(opt(v));
    rows.push_back(jr);
  }
  return {{"schema_version", 1}, {"attributes", m.attribute_names}, {"r", rows}};
}

nlohmann::json to_json(const PruningResult& p) {
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& d : p.dropped) {
    dropped.push_back({{"name", d.name}, {"culprit", d.culprit}, {"r", d.r}});
  }
  return {{"kept", p.kept}, {"dropped", dropped}, {"threshold", p.threshold}};
}

std::vector<ColumnProfile> profiles_from_json(const nlohmann::json& j) {
  std::vector<ColumnProfile> out;
  for (const auto& c : j.at("columns")) {
    ColumnProfile p;
    p.name = c.at("name").get<std::string>();
    p.dtype = c.at("dtype") == "numeric" ? DType::Numeric : DType::Text;
    p.count = c.at("count").get<size_t>();
    p.missing = c.at("missing").get<size_t>();
    if (c.contains("numeric")) {
      const auto& n = c["numeric"];
      p.numeric = NumericSummary{n.at("mean").get<double>(),
                                 opt_from(n.at("sample_std")),
                                 n.at("min").get<double>(),
                                 n.at("q1").get<double>(),
                                 n.at("median").get<double>(),
                                 n.at("q3").get<double>(),
                                 n.at("max").get<double>()};
    }
    if (c.contains("text")) {
      const auto& t = c["text"];
      TextSummary s;
      s.distinct = t.at("distinct").get<size_t>();
      if (!t.at("modal").is_null()) s.modal = t["modal"].get<std::string>();
      s.modal_frequency = t.at("modal_frequency").get<size_t>();
      p.text = s;
    }
    out.push_back(std::move(p));
  }
  return out;
}

CorrelationMatrix correlation_from_json(const nlohmann::json& j) {
  CorrelationMatrix m;
  m.attribute_names = j.at("attributes").get<std::vector<std::string>>();
  for (const auto& row : j.at("r")) {
    std::vector<std::optional<double>> r;
    for (const auto& v : row) r.push_back(opt_from(v));
    m.r.push_back(std::move(r));
  }
  return m;
}

PruningResult pruning_from_json(const nlohmann::json& j) {
  PruningResult p;
  p.kept = j.at("kept").get<std::vector<std::string>>();
  for (const auto& d : j.at("dropped")) {
    p.dropped.push_back({d.at("name").get<std::string>(),
                         d.at("culprit").get<std::string>(),
                         d.at("r").get<double>()});
  }
  p.threshold = j.at("threshold").get<double>();
  return p;
}

}  // namespace convex::profiler
