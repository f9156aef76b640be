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

// Seeded data generators shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "convex/tabular/ingest.hpp"
#include "convex/tabular/table.hpp"

namespace convex::testing {

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  size_t index(size_t n) { return static_cast<size_t>(uniform() * n) % n; }

  double normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

inline tabular::Column numeric_column(std::string name,
                                      const std::vector<double>& values) {
  std::vector<std::optional<double>> cells(values.begin(), values.end());
  return tabular::Column::numeric(std::move(name), std::move(cells));
}

inline tabular::Column text_column(std::string name,
                                   const std::vector<std::string>& values) {
  std::vector<std::optional<std::string>> cells(values.begin(), values.end());
  return tabular::Column::text(std::move(name), std::move(cells));
}

inline tabular::Table random_numeric_table(uint64_t seed, size_t rows,
                                           size_t cols) {
  Rng rng(seed);
  std::vector<tabular::Column> columns;
  for (size_t c = 0; c < cols; ++c) {
    std::vector<double> v(rows);
    for (auto& x : v) x = rng.normal() * (c + 1) + static_cast<double>(c);
    columns.push_back(numeric_column("x" + std::to_string(c), v));
  }
  return tabular::Table("random", std::move(columns));
}

struct Blobs {
  std::vector<std::vector<double>> points;
  std::vector<size_t> labels;
};

// `clusters` Gaussian blobs of `per_cluster` points in `dims` dimensions.
// Blob centres sit on scaled simplex-like corners so that every pair is at
// least `separation` apart; within-blob standard deviation is `stddev`.
inline Blobs gaussian_blobs(uint64_t seed, size_t clusters, size_t per_cluster,
                            size_t dims, double separation, double stddev) {
  Rng rng(seed);
  Blobs out;
  for (size_t k = 0; k < clusters; ++k) {
    std::vector<double> centre(dims, 0.0);
    centre[k % dims] = separation * (1.0 + static_cast<double>(k / dims));
    for (size_t i = 0; i < per_cluster; ++i) {
      std::vector<double> p(dims);
      for (size_t d = 0; d < dims; ++d) p[d] = centre[d] + stddev * rng.normal();
      out.points.push_back(std::move(p));
      out.labels.push_back(k);
    }
  }
  return out;
}

inline tabular::Table blobs_table(const Blobs& blobs,
                                  const std::vector<double>& scales = {}) {
  const size_t dims = blobs.points.front().size();
  std::vector<tabular::Column> cols;
  std::vector<std::string> labels;
  for (size_t r = 0; r < blobs.points.size(); ++r) {
    labels.push_back("row" + std::to_string(r));
  }
  cols.push_back(text_column("label", labels));
  for (size_t d = 0; d < dims; ++d) {
    std::vector<double> v;
    double s = d < scales.size() ? scales[d] : 1.0;
    for (const auto& p : blobs.points) v.push_back(p[d] * s);
    cols.push_back(numeric_column("f" + std::to_string(d), v));
  }
  return tabular::Table("blobs", std::move(cols));
}

inline std::string five_sheet_bundle() {
  tabular::Workbook wb;
  for (int i = 1; i <= 5; ++i) {
    std::string csv = "country,score\n";
    for (int r = 0; r < 4; ++r) {
      csv += "c" + std::to_string(r) + "," + std::to_string(i * 10 + r) + "\n";
    }
    wb.sheets.push_back({"Sheet" + std::to_string(i), csv, ','});
  }
  return tabular::write_workbook(wb);
}

// Remaps labels to first-appearance order so clusterings can be compared up
// to renumbering.
template <typename Labels>
std::vector<size_t> canonical_labels(const Labels& labels) {
  std::vector<size_t> out;
  std::vector<std::pair<size_t, size_t>> seen;
  for (auto l : labels) {
    size_t v = static_cast<size_t>(l);
    size_t id = seen.size();
    for (const auto& [from, to] : seen) {
      if (from == v) id = to;
    }
    if (id == seen.size()) seen.emplace_back(v, id);
    out.push_back(id);
  }
  return out;
}

}  // namespace convex::testing
