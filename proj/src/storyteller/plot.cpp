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

#include "convex/storyteller/plot.hpp"

#include <algorithm>
#include <cmath>

#include "convex/common/text.hpp"

namespace convex::storyteller {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 500;
constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

const char* color(size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string num(double v) { return format_fixed(v, 2); }

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Typographic minus for negative annotations.
std::string signed_label(double v, int decimals) {
  std::string s = format_fixed(v, decimals);
  if (!s.empty() && s[0] == '-') s.replace(0, 1, "−");
  return s;
}

struct Frame {
  double left, top, width, height;
};

class Svg {
 public:
  Svg(const PlotSpec& spec) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" "
            "height=\"500\" viewBox=\"0 0 800 500\" data-kind=\"" +
            std::string(to_string(spec.kind)) + "\">\n";
    out_ += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
    if (!spec.title.empty()) {
      text(kWidth / 2, 28, spec.title, "middle", 18, "title");
    }
    if (!spec.caption.empty()) out_ += "<desc>" + escape(spec.caption) + "</desc>\n";
  }

  void raw(const std::string& s) { out_ += s; }

  void text(double x, double y, std::string_view s, const char* anchor = "middle",
            int size = 12, const char* cls = nullptr, double rotate = 0) {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" "
            "font-size=\"" + std::to_string(size) + "\" text-anchor=\"" + anchor + "\"";
    if (cls) out_ += std::string(" class=\"") + cls + "\"";
    if (rotate != 0) {
      out_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    }
    out_ += ">" + escape(s) + "</text>\n";
  }

  void rect(double x, double y, double w, double h, const char* fill,
            const std::string& extra = "") {
    out_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
            "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"" + extra + "/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke = "#333333",
            double width = 1) {
    out_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
            "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
            num(width) + "\"/>\n";
  }

  void axes(const Frame& f, const std::string& x_label, const std::string& y_label) {
    line(f.left, f.top + f.height, f.left + f.width, f.top + f.height);
    line(f.left, f.top, f.left, f.top + f.height);
    if (!x_label.empty()) text(f.left + f.width / 2, f.top + f.height + 36, x_label);
    if (!y_label.empty()) {
      text(f.left - 44, f.top + f.height / 2, y_label, "middle", 12, nullptr, -90);
    }
  }

  std::string finish() {
    out_ += "</svg>\n";
    return std::move(out_);
  }

 private:
  std::string out_;
};

double scale(double v, double lo, double hi, double a, double b) {
  if (hi == lo) return (a + b) / 2;
  return a + (v - lo) / (hi - lo) * (b - a);
}

std::string heat_color(double r) {
  // White at 0, blue toward -1, red toward +1.
  r = std::clamp(r, -1.0, 1.0);
  auto mix = [](double from, double to, double t) {
    return static_cast<int>(std::lround(from + (to - from) * t));
  };
  int cr, cg, cb;
  if (r >= 0) {
    cr = mix(255, 202, r), cg = mix(255, 0, r), cb = mix(255, 32, r);
  } else {
    cr = mix(255, 5, -r), cg = mix(255, 113, -r), cb = mix(255, 176, -r);
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", cr, cg, cb);
  return buf;
}

std::string render_histogram(const PlotSpec& spec, Svg& svg) {
  const size_t n = spec.series.size();
  const size_t cols = n <= 1 ? 1 : n <= 4 ? 2 : 3;
  const size_t rows = (n + cols - 1) / cols;
  const double cell_w = (kWidth - 40) / static_cast<double>(cols);
  const double cell_h = (kHeight - 60) / static_cast<double>(rows);
  for (size_t s = 0; s < n; ++s) {
    const auto& series = spec.series[s];
    const double ox = 20 + cell_w * static_cast<double>(s % cols);
    const double oy = 50 + cell_h * static_cast<double>(s / cols);
    Frame f{ox + 50, oy + 22, cell_w - 70, cell_h - 62};
    svg.raw("<g class=\"panel\" data-series=\"" + escape(series.name) + "\">\n");
    svg.text(ox + cell_w / 2, oy + 14, series.name, "middle", 13);
    svg.axes(f, n == 1 ? spec.x_label : "", n == 1 ? spec.y_label : "");
    if (series.values.empty()) {
      svg.text(f.left + f.width / 2, f.top + f.height / 2, "no values");
      svg.raw("</g>\n");
      continue;
    }
    const auto counts = histogram_counts(series.values, spec.bins);
    const size_t peak = *std::max_element(counts.begin(), counts.end());
    const double bw = f.width / static_cast<double>(counts.size());
    for (size_t b = 0; b < counts.size(); ++b) {
      double h = peak ? f.height * static_cast<double>(counts[b]) / static_cast<double>(peak) : 0;
      svg.rect(f.left + bw * static_cast<double>(b) + 1, f.top + f.height - h, bw - 2, h,
               color(s), " class=\"bar\" data-count=\"" + std::to_string(counts[b]) + "\"");
    }
    auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
    svg.text(f.left, f.top + f.height + 16, signed_label(*lo, 2), "start", 10);
    svg.text(f.left + f.width, f.top + f.height + 16, signed_label(*hi, 2), "end", 10);
    svg.text(f.left - 6, f.top + 4, std::to_string(peak), "end", 10);
    svg.raw("</g>\n");
  }
  return svg.finish();
}

std::string render_heatmap(const PlotSpec& spec, Svg& svg) {
  const size_t n = spec.labels.size();
  const double side = std::min(kWidth - 260, kHeight - 150);
  const double cell = side / static_cast<double>(n);
  const double left = 200, top = 70;
  for (size_t i = 0; i < n; ++i) {
    svg.text(left - 8, top + cell * (static_cast<double>(i) + 0.5) + 4, spec.labels[i], "end", 11);
    svg.text(left + cell * (static_cast<double>(i) + 0.5), top + side + 16, spec.labels[i],
             "end", 11, nullptr, -35);
    for (size_t j = 0; j < n; ++j) {
      const auto& v = spec.matrix[i][j];
      double x = left + cell * static_cast<double>(j), y = top + cell * static_cast<double>(i);
      std::string fill = v ? heat_color(*v) : "#dddddd";
      svg.rect(x, y, cell, cell, fill.c_str(), " stroke=\"#ffffff\" class=\"cell\"");
      std::string label = v ? signed_label(*v, 2) : "n/a";
      int size = static_cast<int>(std::clamp(cell / 4, 8.0, 14.0));
      svg.text(x + cell / 2, y + cell / 2 + size / 3.0, label, "middle", size, "value");
    }
  }
  return svg.finish();
}

std::string render_elbow(const PlotSpec& spec, Svg& svg) {
  Frame f{90, 60, kWidth - 140, kHeight - 140};
  svg.axes(f, spec.x_label.empty() ? "number of clusters k" : spec.x_label,
           spec.y_label.empty() ? "WCSS" : spec.y_label);
  const double k_lo = static_cast<double>(spec.wcss_by_k.begin()->first);
  const double k_hi = static_cast<double>(spec.wcss_by_k.rbegin()->first);
  double w_lo = 0, w_hi = 0;
  for (const auto& [k, w] : spec.wcss_by_k) w_hi = std::max(w_hi, w);
  if (w_hi == 0) w_hi = 1;
  std::string pts;
  for (const auto& [k, w] : spec.wcss_by_k) {
    double x = scale(static_cast<double>(k), k_lo, k_hi, f.left + 20, f.left + f.width - 20);
    double y = scale(w, w_lo, w_hi, f.top + f.height, f.top);
    if (!pts.empty()) pts += ' ';
    pts += num(x) + "," + num(y);
    svg.text(x, f.top + f.height + 16, std::to_string(k), "middle", 11);
  }
  svg.raw("<polyline fill=\"none\" stroke=\"" + std::string(color(0)) +
          "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n");
  svg.text(f.left - 6, f.top + 4, format_fixed(w_hi, 1), "end", 10);
  svg.text(f.left - 6, f.top + f.height, "0", "end", 10);
  for (const auto& [k, w] : spec.wcss_by_k) {
    double x = scale(static_cast<double>(k), k_lo, k_hi, f.left + 20, f.left + f.width - 20);
    double y = scale(w, w_lo, w_hi, f.top + f.height, f.top);
    if (k == spec.chosen_k) {
      svg.raw("<circle id=\"chosen-k\" data-k=\"" + std::to_string(k) + "\" cx=\"" + num(x) +
              "\" cy=\"" + num(y) + "\" r=\"8\" fill=\"none\" stroke=\"" + color(2) +
              "\" stroke-width=\"3\"/>\n");
      svg.text(x + 12, y - 12, "k = " + std::to_string(k), "start", 13);
    }
    svg.raw("<circle class=\"point\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"4\" fill=\"" +
            color(0) + "\"/>\n");
  }
  return svg.finish();
}

std::string render_scatter(const PlotSpec& spec, Svg& svg) {
  Frame f{90, 60, kWidth - 220, kHeight - 140};
  std::string xl = spec.x_label.empty()
                       ? "PC1 (" + format_fixed(100 * spec.explained[0], 1) + "% of variance)"
                       : spec.x_label;
  std::string yl = spec.y_label.empty()
                       ? "PC2 (" + format_fixed(100 * spec.explained[1], 1) + "% of variance)"
                       : spec.y_label;
  svg.axes(f, xl, yl);
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  bool first = true;
  auto extend = [&](const std::array<double, 2>& p) {
    if (first) {
      x_lo = x_hi = p[0];
      y_lo = y_hi = p[1];
      first = false;
    }
    x_lo = std::min(x_lo, p[0]), x_hi = std::max(x_hi, p[0]);
    y_lo = std::min(y_lo, p[1]), y_hi = std::max(y_hi, p[1]);
  };
  for (const auto& p : spec.points) extend(p);
  for (const auto& p : spec.centroid_points) extend(p);
  double px = (x_hi - x_lo) * 0.05, py = (y_hi - y_lo) * 0.05;
  x_lo -= px, x_hi += px, y_lo -= py, y_hi += py;
  auto X = [&](double v) { return scale(v, x_lo, x_hi, f.left, f.left + f.width); };
  auto Y = [&](double v) { return scale(v, y_lo, y_hi, f.top + f.height, f.top); };
  for (size_t i = 0; i < spec.points.size(); ++i) {
    size_t c = i < spec.assignments.size() ? spec.assignments[i] : 0;
    svg.raw("<circle class=\"point\" data-cluster=\"" + std::to_string(c) + "\" cx=\"" +
            num(X(spec.points[i][0])) + "\" cy=\"" + num(Y(spec.points[i][1])) +
            "\" r=\"4\" fill=\"" + color(c) + "\" fill-opacity=\"0.75\"/>\n");
  }
  for (size_t c = 0; c < spec.centroid_points.size(); ++c) {
    double x = X(spec.centroid_points[c][0]), y = Y(spec.centroid_points[c][1]);
    svg.raw("<path class=\"centroid\" data-cluster=\"" + std::to_string(c) + "\" d=\"M " +
            num(x) + " " + num(y - 9) + " L " + num(x + 9) + " " + num(y) + " L " + num(x) +
            " " + num(y + 9) + " L " + num(x - 9) + " " + num(y) + " Z\" fill=\"" + color(c) +
            "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n");
    double ly = 80 + 20 * static_cast<double>(c);
    svg.rect(kWidth - 110, ly - 10, 12, 12, color(c));
    svg.text(kWidth - 92, ly, "cluster " + std::to_string(c + 1), "start", 12);
  }
  return svg.finish();
}

std::string render_centroids(const PlotSpec& spec, Svg& svg) {
  const size_t d = spec.features.size();
  const size_t k = spec.centroids.size();
  const size_t cols = d <= 1 ? 1 : d <= 4 ? 2 : d <= 9 ? 3 : 4;
  const size_t rows = (d + cols - 1) / cols;
  const double cell_w = (kWidth - 40) / static_cast<double>(cols);
  const double cell_h = (kHeight - 60) / static_cast<double>(rows);
  for (size_t j = 0; j < d; ++j) {
    const double ox = 20 + cell_w * static_cast<double>(j % cols);
    const double oy = 50 + cell_h * static_cast<double>(j / cols);
    Frame f{ox + 50, oy + 22, cell_w - 70, cell_h - 50};
    double lo = 0, hi = 0;
    for (size_t c = 0; c < k; ++c) {
      double s = c < spec.stds.size() ? spec.stds[c][j] : 0;
      lo = std::min(lo, spec.centroids[c][j] - s);
      hi = std::max(hi, spec.centroids[c][j] + s);
    }
    if (hi == lo) hi = lo + 1;
    auto Y = [&](double v) { return scale(v, lo, hi, f.top + f.height, f.top); };
    svg.raw("<g class=\"panel\" data-feature=\"" + escape(spec.features[j]) + "\">\n");
    svg.text(ox + cell_w / 2, oy + 14, spec.features[j], "middle", 13);
    svg.line(f.left, Y(0), f.left + f.width, Y(0), "#999999");
    svg.line(f.left, f.top, f.left, f.top + f.height);
    const double bw = f.width / static_cast<double>(k);
    for (size_t c = 0; c < k; ++c) {
      double m = spec.centroids[c][j];
      double s = c < spec.stds.size() ? spec.stds[c][j] : 0;
      double x = f.left + bw * static_cast<double>(c);
      double top = std::min(Y(m), Y(0)), h = std::abs(Y(m) - Y(0));
      svg.rect(x + 3, top, bw - 6, h, color(c),
               " class=\"bar\" data-cluster=\"" + std::to_string(c) + "\" data-mean=\"" +
                   format_roundtrip(m) + "\"");
      double cx = x + bw / 2;
      svg.line(cx, Y(m - s), cx, Y(m + s), "#000000", 1.5);
      svg.line(cx - 4, Y(m - s), cx + 4, Y(m - s), "#000000", 1.5);
      svg.line(cx - 4, Y(m + s), cx + 4, Y(m + s), "#000000", 1.5);
    }
    svg.text(f.left - 6, f.top + 4, signed_label(hi, 2), "end", 10);
    svg.text(f.left - 6, f.top + f.height, signed_label(lo, 2), "end", 10);
    svg.raw("</g>\n");
  }
  return svg.finish();
}

}  // namespace

std::string_view to_string(PlotKind k) {
  switch (k) {
    case PlotKind::Histogram: return "Histogram";
    case PlotKind::Heatmap: return "Heatmap";
    case PlotKind::ElbowCurve: return "ElbowCurve";
    case PlotKind::ClusterScatter2D: return "ClusterScatter2D";
    case PlotKind::CentroidBars: return "CentroidBars";
  }
  return "Histogram";
}

std::string_view short_name(PlotKind k) {
  switch (k) {
    case PlotKind::Histogram: return "histogram";
    case PlotKind::Heatmap: return "heatmap";
    case PlotKind::ElbowCurve: return "elbow";
    case PlotKind::ClusterScatter2D: return "scatter";
    case PlotKind::CentroidBars: return "centroids";
  }
  return "histogram";
}

PlotKind plot_kind_from_string(std::string_view s) {
  for (auto k : {PlotKind::Histogram, PlotKind::Heatmap, PlotKind::ElbowCurve,
                 PlotKind::ClusterScatter2D, PlotKind::CentroidBars}) {
    if (s == to_string(k) || s == short_name(k)) return k;
  }
  throw UnknownKindError("unknown plot kind '" + std::string(s) + "'");
}

std::vector<size_t> histogram_counts(const std::vector<double>& values, size_t bins) {
  if (bins == 0) throw EmptyDataError("histogram needs at least one bin");
  std::vector<size_t> counts(bins, 0);
  if (values.empty()) return counts;
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  for (double v : values) {
    size_t b = 0;
    if (hi > lo) {
      b = static_cast<size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      b = std::min(b, bins - 1);
    }
    ++counts[b];
  }
  return counts;
}

std::string render_plot(const PlotSpec& spec) {
  switch (spec.kind) {
    case PlotKind::Histogram: {
      bool any = false;
      for (const auto& s : spec.series) any |= !s.values.empty();
      if (!any) throw EmptyDataError("histogram has no values");
      break;
    }
    case PlotKind::Heatmap:
      if (spec.labels.empty() || spec.matrix.size() != spec.labels.size()) {
        throw EmptyDataError("heatmap needs a square matrix with labels");
      }
      for (const auto& row : spec.matrix) {
        if (row.size() != spec.labels.size()) throw EmptyDataError("heatmap matrix is not square");
      }
      break;
    case PlotKind::ElbowCurve:
      if (spec.wcss_by_k.empty()) throw EmptyDataError("elbow curve has no WCSS values");
      break;
    case PlotKind::ClusterScatter2D:
      if (spec.points.empty()) throw EmptyDataError("scatter has no points");
      break;
    case PlotKind::CentroidBars:
      if (spec.features.empty() || spec.centroids.empty()) {
        throw EmptyDataError("centroid bars need features and centroids");
      }
      break;
  }
  Svg svg(spec);
  switch (spec.kind) {
    case PlotKind::Histogram: return render_histogram(spec, svg);
    case PlotKind::Heatmap: return render_heatmap(spec, svg);
    case PlotKind::ElbowCurve: return render_elbow(spec, svg);
    case PlotKind::ClusterScatter2D: return render_scatter(spec, svg);
    case PlotKind::CentroidBars: return render_centroids(spec, svg);
  }
  throw UnknownKindError("unknown plot kind");
}

}  // namespace convex::storyteller
