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
#include <random>
#include <vector>

#include "convex/clustering/matrix.hpp"
#include "convex/common/error.hpp"

namespace convex::clustering {

CONVEX_DEFINE_ERROR(TooFewPointsError, "too_few_points");
CONVEX_DEFINE_ERROR(RangeTooSmallError, "k_range_too_small");

// Uniform draws over mt19937_64. The mapping from the raw stream is fixed
// here so results do not depend on the standard library's distributions.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  size_t index(size_t n);

 private:
  std::mt19937_64 engine_;
};

struct KMeansResult {
  std::vector<size_t> assignments;
  Matrix centroids;
  double wcss = 0;
  size_t iterations = 0;
  // WCSS after each update step of the winning restart.
  std::vector<double> wcss_trace;
  // Which restart won; equal to the restart count for a warm start.
  size_t restart = 0;
};

// Lloyd iterations from k-means++ seeding, best of `restarts` by WCSS.
// Restart i draws from seed + i.
KMeansResult kmeans(const Matrix& points, size_t k, size_t restarts,
                    size_t max_iterations, uint64_t seed);

// Lloyd iterations from the given initial centroids.
KMeansResult lloyd(const Matrix& points, Matrix initial_centroids,
                   size_t max_iterations);

double wcss_of(const Matrix& points, const Matrix& centroids,
               const std::vector<size_t>& assignments);

// Picks the interior k maximizing WCSS(k-1) - 2 WCSS(k) + WCSS(k+1), ties
// toward the smaller k. The keys must form a contiguous range of length 3+.
size_t elbow_select(const std::map<size_t, double>& wcss_by_k);

}  // namespace convex::clustering
