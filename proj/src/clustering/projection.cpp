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

#include "convex/clustering/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace convex::clustering {

EigenSystem jacobi_eigen(const Matrix& input) {
  const size_t n = input.rows();
  Matrix a = input;
  Matrix v(n, n);
  for (size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double norm = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) norm += a(i, j) * a(i, j);
  }
  const double tol = 1e-30 * std::max(norm, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= tol) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return a(x, x) > a(y, y); });
  EigenSystem out;
  for (size_t idx : order) {
    out.values.push_back(a(idx, idx));
    std::vector<double> vec(n);
    for (size_t k = 0; k < n; ++k) vec[k] = v(k, idx);
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

Projection2D project_2d(const Matrix& points, const Matrix& centroids) {
  const size_t n = points.rows();
  const size_t d = points.cols();
  if (d > kMaxProjectionDims) {
    throw DimensionTooLargeError("projection supports at most " +
                                 std::to_string(kMaxProjectionDims) +
                                 " dimensions, got " + std::to_string(d));
  }
  if (d < 2 || n < 2) {
    throw DegenerateError("projection needs at least 2 points in 2+ dimensions");
  }
  std::vector<double> mean(d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) mean[j] += points(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t a = 0; a < d; ++a) {
      const double da = points(i, a) - mean[a];
      for (size_t b = a; b < d; ++b) {
        cov(a, b) += da * (points(i, b) - mean[b]);
      }
    }
  }
  double trace = 0;
  for (size_t a = 0; a < d; ++a) {
    for (size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }
    trace += cov(a, a);
  }
  if (!(trace > 0)) throw DegenerateError("all points are identical");

  EigenSystem eig = jacobi_eigen(cov);
  Projection2D out;
  for (size_t c = 0; c < 2; ++c) {
    auto vec = eig.vectors[c];
    size_t arg = 0;
    for (size_t k = 1; k < d; ++k) {
      if (std::abs(vec[k]) > std::abs(vec[arg]) + 1e-12) arg = k;
    }
    if (vec[arg] < 0) {
      for (double& x : vec) x = -x;
    }
    out.components.push_back(vec);
    out.explained_variance_ratio[c] =
        std::clamp(std::max(eig.values[c], 0.0) / trace, 0.0, 1.0);
  }
  auto project = [&](std::span<const double> row) {
    std::array<double, 2> xy{};
    for (size_t c = 0; c < 2; ++c) {
      for (size_t k = 0; k < d; ++k) {
        xy[c] += (row[k] - mean[k]) * out.components[c][k];
      }
    }
    return xy;
  };
  for (size_t i = 0; i < n; ++i) out.points.push_back(project(points.row(i)));
  for (size_t i = 0; i < centroids.rows(); ++i) {
    out.centroid_points.push_back(project(centroids.row(i)));
  }
  return out;
}

nlohmann::json to_json(const Projection2D& p) {
  auto pts = [](const std::vector<std::array<double, 2>>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& xy : v) a.push_back({xy[0], xy[1]});
    return a;
  };
  return {{"points", pts(p.points)},
          {"centroid_points", pts(p.centroid_points)},
          {"explained_variance_ratio",
           {p.explained_variance_ratio[0], p.explained_variance_ratio[1]}},
          {"components", p.components}};
}

}  // namespace convex::clustering
