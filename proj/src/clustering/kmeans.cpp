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

#include "convex/clustering/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace convex::clustering {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r].at(c);
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (size_t r = 0; r < rows_; ++r) {
    out[r].assign(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_);
  }
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

size_t SeededRng::index(size_t n) {
  return std::min(static_cast<size_t>(uniform() * static_cast<double>(n)), n - 1);
}

double wcss_of(const Matrix& points, const Matrix& centroids,
               const std::vector<size_t>& assignments) {
  double total = 0;
  for (size_t i = 0; i < points.rows(); ++i) {
    total += squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  return total;
}

namespace {

size_t nearest(std::span<const double> p, const Matrix& centroids,
               double* dist = nullptr) {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.rows(); ++c) {
    double d = squared_distance(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

Matrix plus_plus_init(const Matrix& points, size_t k, SeededRng& rng) {
  const size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  size_t first = rng.index(n);
  std::copy(points.row(first).begin(), points.row(first).end(),
            centroids.row(0).begin());
  for (size_t c = 1; c < k; ++c) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c - 1)));
      total += d2[i];
    }
    size_t pick = n - 1;
    if (total > 0) {
      double target = rng.uniform() * total;
      double acc = 0;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(),
              centroids.row(c).begin());
  }
  return centroids;
}

void update_centroids(const Matrix& points, std::vector<size_t>& assign,
                      Matrix& centroids) {
  const size_t k = centroids.rows();
  const size_t d = points.cols();
  auto recompute = [&] {
    std::vector<size_t> counts(k, 0);
    Matrix sums(k, d);
    for (size_t i = 0; i < points.rows(); ++i) {
      ++counts[assign[i]];
      for (size_t j = 0; j < d; ++j) sums(assign[i], j) += points(i, j);
    }
    return std::make_pair(counts, sums);
  };
  auto [counts, sums] = recompute();
  bool reseeded = false;
  for (size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    // Reseed an emptied cluster with the point farthest from its centroid,
    // taken from a cluster that can spare it.
    size_t far = points.rows();
    double far_d = -1;
    for (size_t i = 0; i < points.rows(); ++i) {
      if (counts[assign[i]] < 2) continue;
      double dist = squared_distance(points.row(i), centroids.row(assign[i]));
      if (dist > far_d) {
        far_d = dist;
        far = i;
      }
    }
    if (far == points.rows()) continue;
    --counts[assign[far]];
    assign[far] = c;
    counts[c] = 1;
    reseeded = true;
  }
  if (reseeded) std::tie(counts, sums) = recompute();
  for (size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (size_t j = 0; j < d; ++j) {
      centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
}

}  // namespace

KMeansResult lloyd(const Matrix& points, Matrix centroids,
                   size_t max_iterations) {
  KMeansResult r;
  const size_t n = points.rows();
  std::vector<size_t> assign(n, 0);
  for (size_t i = 0; i < n; ++i) assign[i] = nearest(points.row(i), centroids);
  size_t it = 0;
  while (it < std::max<size_t>(1, max_iterations)) {
    ++it;
    update_centroids(points, assign, centroids);
    r.wcss_trace.push_back(wcss_of(points, centroids, assign));
    std::vector<size_t> next(n);
    for (size_t i = 0; i < n; ++i) next[i] = nearest(points.row(i), centroids);
    if (next == assign) break;
    assign = std::move(next);
  }
  r.assignments = std::move(assign);
  r.centroids = std::move(centroids);
  r.wcss = wcss_of(points, r.centroids, r.assignments);
  r.iterations = it;
  return r;
}

KMeansResult kmeans(const Matrix& points, size_t k, size_t restarts,
                    size_t max_iterations, uint64_t seed) {
  if (k < 1 || points.rows() < k) {
    throw TooFewPointsError("k-means needs at least k=" + std::to_string(k) +
                            " points, got " + std::to_string(points.rows()));
  }
  KMeansResult best;
  bool have = false;
  for (size_t i = 0; i < std::max<size_t>(1, restarts); ++i) {
    SeededRng rng(seed + i);
    KMeansResult r = lloyd(points, plus_plus_init(points, k, rng), max_iterations);
    r.restart = i;
    if (!have || r.wcss < best.wcss) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

size_t elbow_select(const std::map<size_t, double>& wcss_by_k) {
  if (wcss_by_k.size() < 3) {
    throw RangeTooSmallError("elbow selection needs at least 3 candidate k values, got " +
                             std::to_string(wcss_by_k.size()));
  }
  const size_t lo = wcss_by_k.begin()->first;
  const size_t hi = wcss_by_k.rbegin()->first;
  if (hi - lo + 1 != wcss_by_k.size()) {
    throw RangeTooSmallError("candidate k values must be contiguous");
  }
  double scale = 0;
  for (const auto& [k, w] : wcss_by_k) scale = std::max(scale, std::abs(w));
  const double eps = 1e-12 * scale;
  size_t best_k = lo + 1;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t k = lo + 1; k < hi; ++k) {
    double d2 = wcss_by_k.at(k - 1) - 2 * wcss_by_k.at(k) + wcss_by_k.at(k + 1);
    if (d2 > best + eps) {
      best = d2;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace convex::clustering
