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

#include <array>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "convex/clustering/matrix.hpp"
#include "convex/common/error.hpp"

namespace convex::clustering {

CONVEX_DEFINE_ERROR(DimensionTooLargeError, "dimension_too_large");
CONVEX_DEFINE_ERROR(DegenerateError, "degenerate_data");

inline constexpr size_t kMaxProjectionDims = 50;

struct Projection2D {
  std::vector<std::array<double, 2>> points;
  std::vector<std::array<double, 2>> centroid_points;
  std::array<double, 2> explained_variance_ratio{};
  // Principal axes as rows (2 x d), unit length.
  std::vector<std::vector<double>> components;
};

struct EigenSystem {
  std::vector<double> values;          // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs values[i]
};

// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
EigenSystem jacobi_eigen(const Matrix& symmetric);

// PCA onto the top two components of the sample covariance. Each component
// is oriented so that its largest-magnitude loading is positive.
Projection2D project_2d(const Matrix& points, const Matrix& centroids);

nlohmann::json to_json(const Projection2D& p);

}  // namespace convex::clustering
