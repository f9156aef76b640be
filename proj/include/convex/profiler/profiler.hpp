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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "convex/tabular/table.hpp"

namespace convex::profiler {

CONVEX_DEFINE_ERROR(NotEnoughNumericColumnsError, "not_enough_numeric_columns");
CONVEX_DEFINE_ERROR(InvalidThresholdError, "invalid_threshold");

struct NumericSummary {
  double mean = 0;
  std::optional<double> sample_std;  // undefined for a single value
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
};

struct TextSummary {
  size_t distinct = 0;
  std::optional<std::string> modal;
  size_t modal_frequency = 0;
};

struct ColumnProfile {
  std::string name;
  tabular::DType dtype = tabular::DType::Numeric;
  size_t count = 0;
  size_t missing = 0;
  std::optional<NumericSummary> numeric;  // present iff Numeric and count >= 1
  std::optional<TextSummary> text;        // present iff Text
};

std::vector<ColumnProfile> profile(const tabular::Table& table);

// Quantile of sorted data by linear interpolation between closest ranks
// (position (n-1)·p). `sorted` must be non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

// Pearson product-moment coefficient; nullopt when fewer than two pairs or
// either side has zero variance.
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);

// Pearson over the rows where both columns are present.
std::optional<double> pearson_pairwise(const tabular::Column& a,
                                       const tabular::Column& b);

struct CorrelationMatrix {
  std::vector<std::string> attribute_names;
  std::vector<std::vector<std::optional<double>>> r;

  std::optional<double> at(const std::string& a, const std::string& b) const;
};

CorrelationMatrix correlation_matrix(const tabular::Table& table);

struct DroppedAttribute {
  std::string name;
  std::string culprit;
  double r = 0;

  bool operator==(const DroppedAttribute&) const = default;
};

struct PruningResult {
  std::vector<std::string> kept;
  std::vector<DroppedAttribute> dropped;
  double threshold = 0.95;
};

// Greedy scan in column order: a numeric column is dropped iff its absolute
// correlation with some already-kept column is strictly above `threshold`.
PruningResult prune_correlated(const tabular::Table& table, double threshold);

nlohmann::json to_json(const ColumnProfile& p);
nlohmann::json to_json(const std::vector<ColumnProfile>& profiles);
nlohmann::json to_json(const CorrelationMatrix& m);
nlohmann::json to_json(const PruningResult& p);

std::vector<ColumnProfile> profiles_from_json(const nlohmann::json& j);
CorrelationMatrix correlation_from_json(const nlohmann::json& j);
PruningResult pruning_from_json(const nlohmann::json& j);

}  // namespace convex::profiler
