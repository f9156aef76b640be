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

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "convex/common/files.hpp"
#include "convex/metrics/metrics.hpp"

namespace convex::metrics {

using intent::ActionClass;
using nlohmann::json;

namespace {

// Word choices a phrase pattern draws from; the first entry is canonical.
const std::map<std::string, std::vector<std::string>>& fillers() {
  static const std::map<std::string, std::vector<std::string>> f = {
      {"help", {"help", "assist", "guide", "support"}},
      {"analyse", {"analyse", "analyze", "examine", "study", "inspect", "investigate"}},
      {"explore", {"explore", "browse", "discover"}},
      {"data", {"data", "dataset", "information", "data collection"}},
      {"give", {"give", "provide", "produce", "generate"}},
      {"compute", {"compute", "calculate"}},
      {"describe", {"describe", "outline", "summarise", "summarize"}},
      {"table", {"table", "dataset", "file", "spreadsheet"}},
      {"correlation", {"correlation", "relationship", "dependency", "association"}},
      {"attributes", {"attributes", "columns", "variables", "features"}},
      {"attribute", {"attribute", "column", "variable"}},
      {"correlate", {"correlate", "relate"}},
      {"cluster", {"cluster", "group", "organise", "organize", "segment", "partition"}},
      {"understand", {"understand", "comprehend", "grasp"}},
      {"clusters", {"clusters", "groups", "segments", "categories"}},
      {"remove", {"remove", "eliminate", "drop", "delete", "discard"}},
      {"coefficient", {"coefficient", "correlation"}},
      {"exclude", {"exclude", "ignore", "omit", "remove", "drop"}},
      {"show", {"show", "display", "visualise", "visualize", "plot", "draw"}},
      {"histogram", {"histograms", "distributions"}},
      {"plot", {"plot", "chart", "graph", "diagram"}},
      {"yes", {"Ok.", "Okay.", "Sure.", "Yes.", "Fine."}},
      {"like", {"like", "love", "appreciate"}},
      {"good", {"great", "useful", "clear", "helpful", "interesting"}},
      {"dislike", {"dislike", "hate"}},
      {"bad", {"useless", "confusing", "unclear", "wrong"}},
      {"bye", {"Goodbye", "Bye"}},
      {"stop", {"stop", "end", "finish", "close", "conclude"}},
  };
  return f;
}

// Phrase patterns per move; the first is canonical. {name} draws a filler,
// {=name} substitutes the step parameter.
const std::map<std::string, std::vector<std::string>>& moves() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"handshake",
       {"{help} me to {analyse} my {data}", "I want to {explore} a data collection",
        "I need {help} exploring the following data collection"}},
      {"describe_statistical",
       {"{give} me a statistical description of the {data}",
        "{compute} the summary statistics of my {data}"}},
      {"describe_structural",
       {"{describe} the structure of this {table}", "What is the structure of the {table}?"}},
      {"correlate",
       {"{analyse} the linear correlation between each couple of numerical attributes",
        "{compute} the {correlation} between the {attributes}",
        "{correlate} the numerical {attributes}"}},
      {"cluster",
       {"{cluster} the countries into {clusters}", "I want to {understand} the data further"}},
      {"cluster_k", {"{cluster} the countries into {=k} {clusters}"}},
      {"prune", {"{remove} {attributes} with a {coefficient} greater than {=threshold}"}},
      {"exclude", {"{exclude} the {=attribute} {attribute}"}},
      {"plot_histograms", {"{show} the {histogram} of the {attributes}"}},
      {"plot_heatmap", {"{show} the correlation heatmap"}},
      {"plot_elbow", {"{show} the elbow {plot}"}},
      {"plot_projection", {"{show} a scatter {plot} of the {clusters}"}},
      {"plot_centroids", {"{show} the cluster centroids"}},
      {"answer_yes", {"{yes}"}},
      {"feedback_like", {"I {like} these results", "These results are {good}"}},
      {"feedback_dislike", {"I {dislike} this", "This is {bad}"}},
      {"end", {"{bye}", "I want to {stop} the session"}},
  };
  return m;
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Draws are taken modulo the raw 64-bit output so that realizations do not
// depend on the standard library's distribution implementations.
size_t draw(std::mt19937_64& rng, size_t n) { return static_cast<size_t>(rng() % n); }

std::string param_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string render(const std::string& pattern, const json& params, std::mt19937_64* rng) {
  std::string out;
  size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    const size_t close = pattern.find('}', i);
    std::string name = pattern.substr(i + 1, close - i - 1);
    i = close + 1;
    if (!name.empty() && name[0] == '=') {
      const std::string key = name.substr(1);
      const json& v = params.contains(key + "_text") ? params[key + "_text"] : params.at(key);
      out += param_text(v);
      continue;
    }
    const auto& words = fillers().at(name);
    out += rng ? words[draw(*rng, words.size())] : words.front();
  }
  return out;
}

void realize_step(Step& step, std::mt19937_64& rng) {
  const auto& patterns = moves().at(step.move);
  step.text = render(patterns[draw(rng, patterns.size())], step.params, &rng);
  const std::string canonical = render(patterns.front(), step.params, nullptr);
  step.rephrasings.clear();
  if (canonical != step.text) step.rephrasings.push_back(canonical);
}

intent::Intent gold_intent_for(const std::string& move, const json& params) {
  intent::Intent in;
  auto& sl = in.slots;
  if (move == "handshake") {
    in.action = ActionClass::ExploreHandshake;
  } else if (move == "describe_statistical") {
    in.action = ActionClass::DescribeStatistical;
    sl.description = "statistical";
  } else if (move == "describe_structural") {
    in.action = ActionClass::DescribeStructural;
    sl.description = "structural";
  } else if (move == "correlate") {
    in.action = ActionClass::Correlate;
  } else if (move == "cluster") {
    in.action = ActionClass::Cluster;
  } else if (move == "cluster_k") {
    in.action = ActionClass::Cluster;
    sl.k_hint = params.at("k").get<size_t>();
  } else if (move == "prune") {
    in.action = ActionClass::ExcludeAttribute;
    sl.threshold_hint = params.at("threshold").get<double>();
  } else if (move == "exclude") {
    in.action = ActionClass::ExcludeAttribute;
    sl.attribute_names = {params.at("attribute").get<std::string>()};
  } else if (move.rfind("plot_", 0) == 0) {
    in.action = ActionClass::PlotRequest;
    static const std::map<std::string, std::string> kinds = {
        {"plot_histograms", "histogram"}, {"plot_heatmap", "heatmap"},
        {"plot_elbow", "elbow"},          {"plot_projection", "scatter"},
        {"plot_centroids", "centroids"}};
    sl.plot_kind = kinds.at(move);
  } else if (move == "answer_yes") {
    in.action = ActionClass::AcceptSuggestion;
  } else if (move == "feedback_like") {
    in.action = ActionClass::ProvideFeedback;
    sl.rating = intent::Rating::Like;
  } else if (move == "feedback_dislike") {
    in.action = ActionClass::ProvideFeedback;
    sl.rating = intent::Rating::Dislike;
  } else if (move == "end") {
    in.action = ActionClass::EndSession;
  }
  return in;
}

json plan_structure(const planner::Plan& p) {
  json nodes = json::array();
  for (const auto& n : p.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", planner::to_string(n.kind)},
                     {"op", n.op_name},
                     {"params", planner::normalized_params(n)}});
  }
  json edges = json::array();
  for (const auto& [a, b] : p.edges) edges.push_back({a, b});
  return {{"nodes", nodes}, {"edges", edges}};
}

json step_json(const Step& s) {
  if (s.move == "upload") return {{"move", "upload"}, {"file", s.file}};
  json slots = intent::to_json(*s.gold_intent)["slots"];
  return {{"move", s.move},
          {"text", s.text},
          {"rephrasings", s.rephrasings},
          {"params", s.params},
          {"gold_intent", {{"action", intent::to_string(s.gold_intent->action)}, {"slots", slots}}}};
}

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw CorpusSchemaError(path + ": " + what);
}

Step step_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  if (!j.contains("move") || !j["move"].is_string()) schema_error(path + ".move", "missing");
  Step s;
  s.move = j["move"].get<std::string>();
  if (s.move == "upload") {
    if (!j.contains("file") || !j["file"].is_string()) schema_error(path + ".file", "missing");
    s.file = j["file"].get<std::string>();
    return s;
  }
  if (!moves().count(s.move)) schema_error(path + ".move", "unknown move '" + s.move + "'");
  if (!j.contains("text") || !j["text"].is_string() || j["text"].get<std::string>().empty()) {
    schema_error(path + ".text", "missing");
  }
  s.text = j["text"].get<std::string>();
  try {
    s.rephrasings = j.value("rephrasings", std::vector<std::string>{});
    s.params = j.value("params", json::object());
  } catch (const json::exception& e) {
    schema_error(path, e.what());
  }
  if (!j.contains("gold_intent") || !j["gold_intent"].is_object()) {
    schema_error(path + ".gold_intent", "missing");
  }
  json gi = j["gold_intent"];
  if (!gi.contains("action") || !gi["action"].is_string() ||
      !intent::action_from_string(gi["action"].get<std::string>())) {
    schema_error(path + ".gold_intent.action", "missing or unknown");
  }
  if (!gi.contains("slots")) gi["slots"] = json::object();
  gi["confidence"] = "Exact";
  gi["matched_terms"] = json::array();
  try {
    s.gold_intent = intent::intent_from_json(gi);
  } catch (const json::exception& e) {
    schema_error(path + ".gold_intent.slots", e.what());
  }
  return s;
}

// Samples a move sequence: handshake, upload, an optional description, one
// to three analysis moves with optional feedback and follow-up plots, end.
std::vector<Step> sample_steps(std::mt19937_64& rng, size_t index, const std::string& file,
                               const std::vector<std::string>& numeric_columns) {
  std::vector<Step> steps;
  auto add = [&](const std::string& move, json params = json::object()) {
    Step s;
    s.move = move;
    s.params = std::move(params);
    steps.push_back(std::move(s));
  };
  add("handshake");
  Step up;
  up.move = "upload";
  up.file = file;
  steps.push_back(up);
  // The first cases stop at data preparation so the corpus holds plans
  // equal to a shipped template.
  if (index == 0) {
    add("end");
    return steps;
  }
  if (index == 1 || draw(rng, 10) < 7) {
    add(draw(rng, 10) < 7 || index == 1 ? "describe_statistical" : "describe_structural");
  }
  if (index == 1) {
    add("end");
    return steps;
  }
  bool correlated = false, clustered = false;
  const size_t n = 1 + draw(rng, 3);
  static const std::vector<std::string> k_words = {"two", "three", "four", "five"};
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> options = {"correlate", "cluster", "cluster_k", "prune", "exclude",
                                        "plot_histograms"};
    if (correlated) options.push_back("plot_heatmap");
    if (clustered) {
      options.push_back("plot_elbow");
      options.push_back("plot_projection");
      options.push_back("plot_centroids");
    }
    const std::string move = options[draw(rng, options.size())];
    if (move == "cluster_k") {
      const size_t k = 2 + draw(rng, 4);
      json p = {{"k", k}};
      if (draw(rng, 2) == 0) p["k_text"] = k_words[k - 2];
      add(move, p);
    } else if (move == "prune") {
      static const std::vector<std::pair<double, std::string>> thresholds = {
          {0.95, "0.95"}, {0.95, "0,95"}, {0.9, "0.9"}, {0.8, "0.8"}};
      const auto& [t, text] = thresholds[draw(rng, thresholds.size())];
      add(move, {{"threshold", t}, {"threshold_text", text}});
    } else if (move == "exclude") {
      add(move, {{"attribute", numeric_columns[draw(rng, numeric_columns.size())]}});
    } else {
      add(move);
    }
    if (move == "correlate" || move == "cluster" || move == "cluster_k") {
      (move == "correlate" ? correlated : clustered) = true;
      const size_t f = draw(rng, 6);
      if (f == 0) add("answer_yes");
      if (f == 1) add("feedback_like");
      if (f == 2) add("feedback_dislike");
    }
  }
  add("end");
  return steps;
}

CaseResult score_case(const GoldCase& c, const dialogue::Assistant& bot, const RunOptions& opts) {
  CaseResult r;
  r.id = c.id;
  try {
    auto s = play_case(c, bot, opts, false);
    for (const auto& t : s.turns) {
      if (t.speaker == executor::Speaker::User && t.meta.contains("intent")) {
        r.utterances.push_back(t.text);
      }
    }
    r.interactions = interactions_per_intent(s);
    if (s.plan) r.plan = m2(*s.plan, c.gold_plan);
    r.story = s.story_artifact.has_value();
    for (const auto& a : s.artifacts) r.artifacts.push_back(a.sha256);
    r.session = std::make_shared<executor::Session>(std::move(s));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

json to_json(const Corpus& corpus) {
  json cases = json::array();
  for (const auto& c : corpus.cases) {
    json steps = json::array();
    for (const auto& s : c.steps) steps.push_back(step_json(s));
    cases.push_back({{"id", c.id}, {"steps", steps}, {"gold_plan", plan_structure(c.gold_plan)}});
  }
  return {{"schema_version", kCorpusSchemaVersion}, {"seed", corpus.seed}, {"cases", cases}};
}

Corpus corpus_from_json(const json& j) {
  if (!j.is_object()) schema_error("$", "expected an object");
  if (!j.contains("schema_version") || j["schema_version"] != kCorpusSchemaVersion) {
    schema_error("schema_version", "expected " + std::to_string(kCorpusSchemaVersion));
  }
  if (!j.contains("cases") || !j["cases"].is_array()) schema_error("cases", "missing");
  if (j["cases"].empty()) schema_error("cases", "the corpus has no cases");
  Corpus corpus;
  if (j.contains("seed") && j["seed"].is_number_unsigned()) corpus.seed = j["seed"].get<uint64_t>();
  for (size_t i = 0; i < j["cases"].size(); ++i) {
    const json& cj = j["cases"][i];
    const std::string path = "cases[" + std::to_string(i) + "]";
    if (!cj.is_object()) schema_error(path, "expected an object");
    GoldCase c;
    if (!cj.contains("id") || !cj["id"].is_string()) schema_error(path + ".id", "missing");
    c.id = cj["id"].get<std::string>();
    if (!cj.contains("steps") || !cj["steps"].is_array() || cj["steps"].empty()) {
      schema_error(path + ".steps", "missing or empty");
    }
    for (size_t k = 0; k < cj["steps"].size(); ++k) {
      c.steps.push_back(step_from_json(cj["steps"][k], path + ".steps[" + std::to_string(k) + "]"));
    }
    if (!cj.contains("gold_plan")) schema_error(path + ".gold_plan", "missing");
    try {
      c.gold_plan = planner::plan_from_json(cj["gold_plan"]);
    } catch (const Error& e) {
      schema_error(path + ".gold_plan", e.what());
    }
    const auto violations = planner::validate(c.gold_plan);
    if (!violations.empty()) {
      schema_error(path + ".gold_plan", violations.front().code + ": " + violations.front().message);
    }
    corpus.cases.push_back(std::move(c));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error("$", "invalid JSON at byte " + std::to_string(e.byte));
  }
  return corpus_from_json(j);
}

void realize(GoldCase& c, uint64_t seed) {
  std::mt19937_64 rng(seed ^ fnv1a(c.id));
  for (auto& s : c.steps) {
    if (s.move != "upload") realize_step(s, rng);
  }
}

executor::Session play_case(const GoldCase& c, const dialogue::Assistant& bot,
                            const RunOptions& opts, bool gold) {
  auto s = bot.open_session("corpus-" + c.id, opts.engine_seed);
  s.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  dialogue::UserProfile profile;
  for (const auto& step : c.steps) {
    if (s.status != executor::SessionStatus::Active) break;
    if (step.move == "upload") {
      const std::string dir = opts.fixture_dir.empty() ? data_dir() + "/fixtures" : opts.fixture_dir;
      bot.upload(s, step.file, read_file(dir + "/" + step.file), std::nullopt, profile);
      continue;
    }
    if (gold) {
      bot.handle_intent(s, step.text, *step.gold_intent, profile);
      continue;
    }
    // A user who is asked to clarify tries the plainer wording next.
    std::vector<std::string> attempts{step.text};
    attempts.insert(attempts.end(), step.rephrasings.begin(), step.rephrasings.end());
    for (const auto& text : attempts) {
      bot.handle_turn(s, text, profile);
      const auto& turn = *std::find_if(s.turns.rbegin(), s.turns.rend(), [](const auto& t) {
        return t.speaker == executor::Speaker::User;
      });
      if (turn.meta["intent"].value("action", "Unknown") != "Unknown") break;
      if (s.status != executor::SessionStatus::Active) break;
    }
  }
  return s;
}

Corpus generate_corpus(uint64_t seed, size_t n, const dialogue::Assistant& bot,
                       const std::string& fixture_dir) {
  static const std::string kFile = "gender_norms.csv";
  static const std::vector<std::string> kColumns = {"gdp", "political", "educational", "economic",
                                                    "physical"};
  Corpus corpus;
  corpus.seed = seed;
  std::mt19937_64 rng(seed);
  RunOptions opts;
  opts.fixture_dir = fixture_dir;
  for (size_t i = 0; i < n; ++i) {
    GoldCase c;
    c.id = (i + 1 < 10 ? "case-0" : "case-") + std::to_string(i + 1);
    c.steps = sample_steps(rng, i, kFile, kColumns);
    for (auto& s : c.steps) {
      if (s.move != "upload") s.gold_intent = gold_intent_for(s.move, s.params);
    }
    realize(c, seed);
    auto played = play_case(c, bot, opts, true);
    if (!played.plan) throw CorpusSchemaError(c.id + ": the gold run produced no plan");
    c.gold_plan = planner::plan_from_json(plan_structure(*played.plan));
    corpus.cases.push_back(std::move(c));
  }
  return corpus;
}

MetricsReport run_corpus(const Corpus& corpus, const dialogue::Assistant& bot,
                         const RunOptions& opts) {
  if (corpus.cases.empty()) throw CorpusSchemaError("cases: the corpus has no cases");
  std::vector<GoldCase> cases = corpus.cases;
  if (opts.seed) {
    for (auto& c : cases) realize(c, *opts.seed);
  }
  std::vector<CaseResult> results(cases.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < cases.size(); i = next++) results[i] = score_case(cases[i], bot, opts);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(cases.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  MetricsReport report;
  report.seed = opts.seed;
  report.vocabulary_version = bot.resources().vocabulary->version();
  report.template_version = bot.resources().templates->version();
  std::vector<int> counts;
  std::vector<PlanScore> plans;
  std::vector<executor::Session> sessions;
  for (auto& r : results) {
    counts.insert(counts.end(), r.interactions.begin(), r.interactions.end());
    if (r.plan) plans.push_back(*r.plan);
    if (r.session) sessions.push_back(*r.session);
  }
  if (!counts.empty()) {
    report.m1 = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
  }
  if (!plans.empty()) report.m2 = sum_scores(plans);
  report.m3 = m3(sessions);
  report.m4 = m4(sessions);
  report.cases = std::move(results);
  return report;
}

}  // namespace convex::metrics
