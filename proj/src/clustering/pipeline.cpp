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

#include "convex/clustering/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "convex/clustering/kmeans.hpp"

namespace convex::clustering {

using tabular::Column;
using tabular::Table;

ClusterStageError::ClusterStageError(std::string stage,
                                     const std::string& message)
    : Error("cluster_stage_failed", "clustering stage '" + stage + "': " + message),
      stage_(std::move(stage)) {}

void ClusteringConfig::validate() const {
  if (k_min < 2 || k_min > k_max) {
    throw InvalidConfigError("need 2 <= k_min <= k_max");
  }
  if (restarts < 1) throw InvalidConfigError("restarts must be >= 1");
  if (k && *k < 1) throw InvalidConfigError("explicit k must be >= 1");
  if (!(correlation_prune_threshold > 0 && correlation_prune_threshold <= 1)) {
    throw InvalidConfigError("prune threshold must be in (0, 1]");
  }
}

namespace {

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ClusterStageError&) {
    throw;
  } catch (const std::exception& e) {
    throw ClusterStageError(stage, e.what());
  }
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<double> present(const Column& c) {
  std::vector<double> v;
  for (const auto& x : c.numbers()) {
    if (x) v.push_back(*x);
  }
  return v;
}

std::vector<std::string> labels_for(const Table& table,
                                    const std::vector<size_t>& rows) {
  const Column* label_col = nullptr;
  for (const auto& c : table.columns()) {
    if (!c.is_numeric()) {
      label_col = &c;
      break;
    }
  }
  std::vector<std::string> out;
  for (size_t r : rows) {
    std::string label = label_col ? label_col->cell_text(r) : std::string();
    out.push_back(label.empty() ? "row " + std::to_string(r + 1) : label);
  }
  return out;
}

// Best-of-restarts k-means for each k plus a warm start from the (k-1)
// solution extended with its worst-fit point; the warm start keeps WCSS
// non-increasing in k.
std::map<size_t, KMeansResult> sweep(const Matrix& points, size_t k_lo,
                                     size_t k_hi,
                                     const ClusteringConfig& config) {
  std::map<size_t, KMeansResult> out;
  for (size_t k = k_lo; k <= k_hi; ++k) {
    KMeansResult best = kmeans(points, k, config.restarts,
                               config.max_iterations, config.seed);
    if (k > 1 && out.count(k - 1)) {
      const KMeansResult& prev = out.at(k - 1);
      size_t far = 0;
      double far_d = -1;
      for (size_t i = 0; i < points.rows(); ++i) {
        double d = squared_distance(points.row(i),
                                    prev.centroids.row(prev.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      Matrix init(k, points.cols());
      for (size_t c = 0; c < k - 1; ++c) {
        std::copy(prev.centroids.row(c).begin(), prev.centroids.row(c).end(),
                  init.row(c).begin());
      }
      std::copy(points.row(far).begin(), points.row(far).end(),
                init.row(k - 1).begin());
      KMeansResult warm = lloyd(points, std::move(init), config.max_iterations);
      warm.restart = config.restarts;
      if (warm.wcss < best.wcss) best = std::move(warm);
    }
    out.emplace(k, std::move(best));
  }
  return out;
}

}  // namespace

ClusterResult cluster_table(const Table& table, const ClusteringConfig& config) {
  run_stage("config", [&] {
    config.validate();
    return 0;
  });
  ClusterResult result;
  result.auto_k = !config.k.has_value();

  Table numeric = run_stage("numeric_view", [&] { return numeric_view(table); });

  // Zero-variance columns carry no signal and break z-scores.
  std::vector<std::string> usable;
  for (const auto& c : numeric.columns()) {
    if (sample_variance(present(c)) > 0) {
      usable.push_back(c.name());
    } else {
      result.zero_variance_dropped.push_back(c.name());
      result.warnings.push_back("attribute '" + c.name() +
                                "' has zero variance and was excluded");
    }
  }
  if (usable.empty()) {
    throw ClusterStageError("zero_variance", "every numeric attribute is constant");
  }
  Table varying = numeric.select(usable);

  result.pruning = run_stage("prune", [&] {
    return profiler::prune_correlated(varying, config.correlation_prune_threshold);
  });
  for (const auto& d : result.pruning.dropped) {
    result.warnings.push_back("attribute '" + d.name + "' dropped: |r| with '" +
                              d.culprit + "' exceeds the threshold");
  }
  Table features = varying.select(result.pruning.kept);

  for (size_t r = 0; r < table.n_rows(); ++r) {
    bool complete = true;
    for (const auto& c : features.columns()) complete &= !c.is_missing(r);
    if (complete) result.included_rows.push_back(r);
  }
  const size_t n = result.included_rows.size();
  if (n < table.n_rows()) {
    result.warnings.push_back(std::to_string(table.n_rows() - n) +
                              " rows with missing values were excluded");
  }
  const size_t needed = config.k ? *config.k : config.k_min;
  if (n < needed || n == 0) {
    throw ClusterStageError("listwise_deletion",
                            "only " + std::to_string(n) +
                                " complete rows, need at least " +
                                std::to_string(std::max<size_t>(needed, 1)));
  }

  // Columns can become constant once incomplete rows are gone.
  std::vector<const Column*> cols;
  std::vector<double> means, stds;
  for (const auto& c : features.columns()) {
    std::vector<double> v;
    for (size_t r : result.included_rows) v.push_back(*c.numbers()[r]);
    double var = sample_variance(v);
    if (!(var > 0)) {
      result.zero_variance_dropped.push_back(c.name());
      result.warnings.push_back("attribute '" + c.name() +
                                "' is constant over complete rows and was excluded");
      continue;
    }
    double m = 0;
    for (double x : v) m += x;
    means.push_back(m / static_cast<double>(v.size()));
    stds.push_back(std::sqrt(var));
    cols.push_back(&c);
    result.features_used.push_back(c.name());
  }
  if (cols.empty()) {
    throw ClusterStageError("standardize", "no attribute varies across complete rows");
  }

  Matrix points(n, cols.size());
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < cols.size(); ++j) {
      double x = *cols[j]->numbers()[result.included_rows[i]];
      points(i, j) = config.standardize ? (x - means[j]) / stds[j] : x;
    }
  }

  KMeansResult final_run;
  if (config.k) {
    if (*config.k > n) {
      throw ClusterStageError("kmeans", "k=" + std::to_string(*config.k) +
                                            " exceeds the " + std::to_string(n) +
                                            " complete rows");
    }
    final_run = run_stage("kmeans", [&] {
      return kmeans(points, *config.k, config.restarts, config.max_iterations,
                    config.seed);
    });
    result.k = *config.k;
    result.wcss_by_k[result.k] = final_run.wcss;
  } else {
    const size_t hi = std::min(config.k_max, n - 1);
    if (hi < config.k_min + 2) {
      throw ClusterStageError(
          "elbow", "automatic k needs at least 3 candidate values in [" +
                       std::to_string(config.k_min) + ", " + std::to_string(hi) +
                       "]; provide an explicit k or more rows");
    }
    auto runs = run_stage("kmeans", [&] { return sweep(points, config.k_min, hi, config); });
    for (const auto& [k, r] : runs) result.wcss_by_k[k] = r.wcss;
    result.k = run_stage("elbow", [&] { return elbow_select(result.wcss_by_k); });
    final_run = runs.at(result.k);
  }

  result.assignments.assign(table.n_rows(), std::nullopt);
  for (size_t i = 0; i < n; ++i) {
    result.assignments[result.included_rows[i]] = final_run.assignments[i];
  }
  const size_t d = cols.size();
  result.centroids.assign(result.k, std::vector<double>(d, 0.0));
  result.per_cluster_std.assign(result.k, std::vector<double>(d, 0.0));
  result.cluster_sizes.assign(result.k, 0);
  for (size_t i = 0; i < n; ++i) {
    size_t c = final_run.assignments[i];
    ++result.cluster_sizes[c];
    for (size_t j = 0; j < d; ++j) {
      result.centroids[c][j] += *cols[j]->numbers()[result.included_rows[i]];
    }
  }
  for (size_t c = 0; c < result.k; ++c) {
    for (size_t j = 0; j < d; ++j) {
      if (result.cluster_sizes[c]) {
        result.centroids[c][j] /= static_cast<double>(result.cluster_sizes[c]);
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    size_t c = final_run.assignments[i];
    for (size_t j = 0; j < d; ++j) {
      double dx = *cols[j]->numbers()[result.included_rows[i]] - result.centroids[c][j];
      result.per_cluster_std[c][j] += dx * dx;
    }
  }
  for (size_t c = 0; c < result.k; ++c) {
    for (size_t j = 0; j < d; ++j) {
      double m = static_cast<double>(result.cluster_sizes[c]);
      result.per_cluster_std[c][j] =
          m > 1 ? std::sqrt(result.per_cluster_std[c][j] / (m - 1)) : 0.0;
    }
  }

  result.row_labels = labels_for(table, result.included_rows);
  result.analysis_points = std::move(points);
  result.analysis_centroids = std::move(final_run.centroids);
  return result;
}

nlohmann::json to_json(const ClusterResult& r) {
  nlohmann::json assignments = nlohmann::json::array();
  for (const auto& a : r.assignments) {
    assignments.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  }
  nlohmann::json wcss = nlohmann::json::array();
  for (const auto& [k, w] : r.wcss_by_k) wcss.push_back({{"k", k}, {"wcss", w}});
  return {{"schema_version", 1},
          {"k", r.k},
          {"auto_k", r.auto_k},
          {"assignments", assignments},
          {"centroids", r.centroids},
          {"per_cluster_std", r.per_cluster_std},
          {"cluster_sizes", r.cluster_sizes},
          {"wcss_by_k", wcss},
          {"features_used", r.features_used},
          {"zero_variance_dropped", r.zero_variance_dropped},
          {"pruning", profiler::to_json(r.pruning)},
          {"warnings", r.warnings},
          {"included_rows", r.included_rows},
          {"row_labels", r.row_labels},
          {"analysis_points", r.analysis_points.to_rows()},
          {"analysis_centroids", r.analysis_centroids.to_rows()}};
}

ClusterResult cluster_result_from_json(const nlohmann::json& j) {
  ClusterResult r;
  r.k = j.at("k").get<size_t>();
  r.auto_k = j.at("auto_k").get<bool>();
  for (const auto& a : j.at("assignments")) {
    r.assignments.push_back(a.is_null() ? std::nullopt
                                        : std::optional<size_t>(a.get<size_t>()));
  }
  r.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
  r.per_cluster_std = j.at("per_cluster_std").get<std::vector<std::vector<double>>>();
  r.cluster_sizes = j.at("cluster_sizes").get<std::vector<size_t>>();
  for (const auto& w : j.at("wcss_by_k")) {
    r.wcss_by_k[w.at("k").get<size_t>()] = w.at("wcss").get<double>();
  }
  r.features_used = j.at("features_used").get<std::vector<std::string>>();
  r.zero_variance_dropped = j.at("zero_variance_dropped").get<std::vector<std::string>>();
  r.pruning = profiler::pruning_from_json(j.at("pruning"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.included_rows = j.at("included_rows").get<std::vector<size_t>>();
  r.row_labels = j.at("row_labels").get<std::vector<std::string>>();
  r.analysis_points = Matrix::from_rows(
      j.at("analysis_points").get<std::vector<std::vector<double>>>());
  r.analysis_centroids = Matrix::from_rows(
      j.at("analysis_centroids").get<std::vector<std::vector<double>>>());
  return r;
}

}  // namespace convex::clustering
