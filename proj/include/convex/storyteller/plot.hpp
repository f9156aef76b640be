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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convex/common/error.hpp"

namespace convex::storyteller {

CONVEX_DEFINE_ERROR(EmptyDataError, "empty_plot_data");
CONVEX_DEFINE_ERROR(UnknownKindError, "unknown_plot_kind");

enum class PlotKind { Histogram, Heatmap, ElbowCurve, ClusterScatter2D, CentroidBars };

std::string_view to_string(PlotKind k);
// Accepts the enum names and the short names used in plan params
// (histogram, heatmap, elbow, scatter, centroids).
PlotKind plot_kind_from_string(std::string_view s);
// Short name used for profile likes: histogram, heatmap, elbow, scatter, centroids.
std::string_view short_name(PlotKind k);

struct HistogramSeries {
  std::string name;
  std::vector<double> values;
};

struct PlotSpec {
  PlotKind kind = PlotKind::Histogram;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string caption;

  // Histogram
  std::vector<HistogramSeries> series;
  size_t bins = 10;
  // Heatmap
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> matrix;
  // ElbowCurve
  std::map<size_t, double> wcss_by_k;
  size_t chosen_k = 0;
  // ClusterScatter2D
  std::vector<std::array<double, 2>> points;
  std::vector<size_t> assignments;
  std::vector<std::array<double, 2>> centroid_points;
  std::array<double, 2> explained{};
  // CentroidBars
  std::vector<std::string> features;
  std::vector<std::vector<double>> centroids;  // k x d
  std::vector<std::vector<double>> stds;       // k x d
};

// Equal-width bins over [min, max]; the last bin is closed. A constant
// sample lands entirely in the first bin.
std::vector<size_t> histogram_counts(const std::vector<double>& values, size_t bins);

// Deterministic SVG 1.1 on an 800x500 canvas.
std::string render_plot(const PlotSpec& spec);

}  // namespace convex::storyteller
