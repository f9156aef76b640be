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

#include "doctest.h"

#include <regex>

#include "convex/dialogue/dialogue.hpp"
#include "convex/storyteller/plot.hpp"
#include "convex/storyteller/story.hpp"
#include "support/conversation.hpp"

using namespace convex;
using namespace convex::storyteller;

namespace {

std::vector<std::string> attr_values(const std::string& svg, const std::string& attr) {
  std::regex re(attr + "=\"([^\"]*)\"");
  std::vector<std::string> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

size_t count(const std::string& hay, const std::string& needle) {
  size_t n = 0;
  for (size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("heatmap annotates r to two decimals") {
  PlotSpec spec;
  spec.kind = PlotKind::Heatmap;
  spec.title = "h";
  spec.caption = "c";
  spec.labels = {"a", "b"};
  spec.matrix = {{1.0, -1.0}, {-1.0, 1.0}};
  auto svg = render_plot(spec);
  CHECK(svg.find(">1.00<") != std::string::npos);
  CHECK(svg.find(">−1.00<") != std::string::npos);
  CHECK(svg.find("width=\"800\"") != std::string::npos);
  CHECK(svg.find("height=\"500\"") != std::string::npos);
  spec.matrix = {{1.0, std::nullopt}, {std::nullopt, 1.0}};
  CHECK(render_plot(spec).find(">n/a<") != std::string::npos);
}

TEST_CASE("histogram counts") {
  // Bins [1, 1.5) and [1.5, 2].
  CHECK(histogram_counts({1, 1, 2}, 2) == std::vector<size_t>{2, 1});
  CHECK(histogram_counts({5, 5, 5}, 3) == std::vector<size_t>{3, 0, 0});
  CHECK(histogram_counts({0, 1, 2, 3, 4}, 4) == std::vector<size_t>{1, 1, 1, 2});
  PlotSpec spec;
  spec.kind = PlotKind::Histogram;
  spec.title = "h";
  spec.caption = "c";
  spec.series = {{"x", {1, 1, 2}}};
  spec.bins = 2;
  auto svg = render_plot(spec);
  CHECK(attr_values(svg, "data-count") == std::vector<std::string>{"2", "1"});
}

TEST_CASE("elbow marks the chosen k") {
  PlotSpec spec;
  spec.kind = PlotKind::ElbowCurve;
  spec.title = "e";
  spec.caption = "c";
  spec.wcss_by_k = {{2, 100}, {3, 20}, {4, 15}, {5, 12}};
  spec.chosen_k = 3;
  auto svg = render_plot(spec);
  CHECK(svg.find("id=\"chosen-k\"") != std::string::npos);
  CHECK(attr_values(svg, "data-k") == std::vector<std::string>{"3"});
}

TEST_CASE("scatter and centroid bars") {
  PlotSpec scatter;
  scatter.kind = PlotKind::ClusterScatter2D;
  scatter.title = "s";
  scatter.caption = "c";
  scatter.points = {{0, 0}, {1, 1}, {5, 5}};
  scatter.assignments = {0, 0, 1};
  scatter.centroid_points = {{0.5, 0.5}, {5, 5}};
  scatter.explained = {0.9, 0.1};
  auto svg = render_plot(scatter);
  CHECK(count(svg, "class=\"centroid\"") == 2);
  CHECK(attr_values(svg, "data-cluster").size() >= 3);

  PlotSpec bars;
  bars.kind = PlotKind::CentroidBars;
  bars.title = "b";
  bars.caption = "c";
  bars.features = {"f0", "f1"};
  bars.centroids = {{1, 2}, {3, 4}};
  bars.stds = {{0.1, 0.2}, {0.3, 0.4}};
  svg = render_plot(bars);
  CHECK(attr_values(svg, "data-mean").size() == 4);
}

TEST_CASE("plots are deterministic and reject bad specs") {
  PlotSpec spec;
  spec.kind = PlotKind::Histogram;
  spec.title = "h";
  spec.caption = "c";
  spec.series = {{"x", {3, 1, 4, 1, 5, 9, 2, 6}}};
  CHECK(render_plot(spec) == render_plot(spec));
  spec.series.clear();
  CHECK_THROWS_AS(render_plot(spec), EmptyDataError);
  CHECK_THROWS_AS(plot_kind_from_string("pie"), UnknownKindError);
  CHECK(plot_kind_from_string("scatter") == PlotKind::ClusterScatter2D);
  CHECK(plot_kind_from_string("Heatmap") == PlotKind::Heatmap);
}

TEST_CASE("story of the use case conversation") {
  dialogue::Assistant bot;
  dialogue::UserProfile profile;
  auto s = testing::scripted_session(bot, "story1");
  testing::test1(bot, s, profile);
  REQUIRE(s.story_artifact);
  const auto& md = s.payload(s.require_artifact(*s.story_artifact));
  CHECK(md.rfind("# Exploration of gender_norms", 0) == 0);
  std::vector<std::string> headings;
  std::regex h2("^## (.*)$", std::regex::multiline);
  for (std::sregex_iterator it(md.begin(), md.end(), h2), end; it != end; ++it) {
    headings.push_back((*it)[1]);
  }
  REQUIRE(headings.size() >= 5);
  CHECK(headings[0] == "Dataset Overview");
  CHECK(headings[1].rfind("Profile", 0) == 0);
  CHECK(headings[2] == "Correlation");
  CHECK(headings[headings.size() - 2] == "Conversation Timeline");
  CHECK(headings.back() == "Conclusions");

  // Link check: every reference names a session payload of the right type.
  auto refs = artifact_references(md);
  CHECK(refs.size() >= 4);
  for (const auto& r : refs) {
    bool found = false;
    for (const auto& a : s.artifacts) {
      if (r == "artifacts/" + a.sha256 + "." + std::string(executor::extension(a.kind))) found = true;
    }
    CHECK_MESSAGE(found, r);
  }
  CHECK(md.find("(liked)") != std::string::npos);
  CHECK(md.find("2026-01-01") == std::string::npos);
}

TEST_CASE("clustering conclusions name k and features") {
  dialogue::Assistant bot;
  dialogue::UserProfile profile;
  auto s = testing::scripted_session(bot, "story2");
  bot.upload(s, "gender_norms.csv", read_file(testing::fixture_path("gender_norms.csv")),
             std::nullopt, profile);
  bot.handle_turn(s, "statistical", profile);
  bot.handle_turn(s, "I want to understand the data further.", profile);
  auto doc = build_story(s);
  const auto& md = doc.markdown;
  auto pos = md.find("## Conclusions");
  REQUIRE(pos != std::string::npos);
  auto conclusions = md.substr(pos);
  std::smatch m;
  REQUIRE(std::regex_search(conclusions, m, std::regex("organised into (\\d+) clusters using ([^.]+)\\.")));
  const auto& cluster = s.require_artifact(s.plan->find(8)->outputs.at(0));
  CHECK(m[1] == std::to_string(cluster.meta["k"].get<int>()));
  CHECK(m[2].str().find("gdp") != std::string::npos);
  CHECK(conclusions.find("political") != std::string::npos);  // pruned
  CHECK(md.find("| Cluster | Size | Members |") != std::string::npos);
  CHECK(md.find("Albania") != std::string::npos);
}

TEST_CASE("a session without analysis has no story") {
  dialogue::Assistant bot;
  auto s = bot.open_session("empty");
  CHECK_THROWS_AS(build_story(s), EmptySessionError);
}
