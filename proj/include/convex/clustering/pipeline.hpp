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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "convex/clustering/matrix.hpp"
#include "convex/common/error.hpp"
#include "convex/profiler/profiler.hpp"
#include "convex/tabular/table.hpp"

namespace convex::clustering {

// Failure inside cluster_table, tagged with the stage that raised it.
class ClusterStageError : public Error {
 public:
  ClusterStageError(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

CONVEX_DEFINE_ERROR(InvalidConfigError, "invalid_cluster_config");

struct ClusteringConfig {
  std::optional<size_t> k;  // nullopt selects k automatically
  size_t k_min = 2;
  size_t k_max = 10;
  size_t restarts = 5;
  size_t max_iterations = 100;
  uint64_t seed = 42;
  bool standardize = true;
  double correlation_prune_threshold = 0.95;

  void validate() const;
};

struct ClusterResult {
  size_t k = 0;
  bool auto_k = true;
  // One entry per table row; nullopt for rows removed by listwise deletion.
  std::vector<std::optional<size_t>> assignments;
  std::vector<std::vector<double>> centroids;        // original units
  std::vector<std::vector<double>> per_cluster_std;  // original units
  std::vector<size_t> cluster_sizes;
  std::map<size_t, double> wcss_by_k;
  std::vector<std::string> features_used;
  std::vector<std::string> zero_variance_dropped;
  profiler::PruningResult pruning;
  std::vector<std::string> warnings;

  // Rows that entered the analysis, with display labels.
  std::vector<size_t> included_rows;
  std::vector<std::string> row_labels;
  // The matrix k-means ran on (standardized when configured) and the
  // matching centroids; consumed by the 2-D projection.
  Matrix analysis_points;
  Matrix analysis_centroids;
};

// numeric view -> zero-variance removal -> correlated-attribute pruning ->
// listwise deletion -> z-scores -> k-means (auto k by elbow) -> summaries.
ClusterResult cluster_table(const tabular::Table& table,
                            const ClusteringConfig& config);

nlohmann::json to_json(const ClusterResult& r);
ClusterResult cluster_result_from_json(const nlohmann::json& j);

}  // namespace convex::clustering
