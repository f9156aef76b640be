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

#include <nlohmann/json.hpp>

#include "convex/common/files.hpp"
#include "convex/intent/parser.hpp"

using namespace convex::intent;

namespace {

std::vector<std::string> words(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

const Vocabulary& vocab() { return default_vocabulary(); }

ActionClass action_of(std::string_view u, SessionContext ctx = {}) {
  return parse(u, vocab(), ctx).action;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(words(tokenize("Help me to analyse my data")) ==
        std::vector<std::string>{"help", "me", "to", "analyse", "my", "data"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  ?!  ").empty());

  auto t = tokenize("eliminate variables with a coefficient greater than 0,95");
  REQUIRE(t.back().kind == Token::Kind::Number);
  CHECK(t.back().number == doctest::Approx(0.95));
  CHECK(tokenize("k = 4.")[1].number == 4.0);
  CHECK(tokenize("use 0.5, then 3")[1].number == 0.5);
  CHECK(tokenize("use 0.5, then 3")[3].number == 3.0);
  // A comma followed by a space is punctuation, not a decimal separator.
  CHECK(tokenize("1, 2").size() == 2);
}

TEST_CASE("tokenize strips plurals of vocabulary words only") {
  CHECK(words(tokenize("clusters sheets gas", &vocab())) ==
        std::vector<std::string>{"cluster", "sheet", "gas"});
  CHECK(words(tokenize("statistics", &vocab())) == std::vector<std::string>{"statistics"});
  CHECK(words(tokenize("clusters")) == std::vector<std::string>{"clusters"});
}

TEST_CASE("damerau levenshtein") {
  CHECK(damerau_levenshtein("analyse", "anlayse") == 1);
  CHECK(damerau_levenshtein("analyse", "analyze") == 1);
  CHECK(damerau_levenshtein("kitten", "sitting") == 3);
  CHECK(damerau_levenshtein("", "abc") == 3);
  CHECK(damerau_levenshtein("ca", "abc") == 3);
}

TEST_CASE("default vocabulary") {
  const auto& v = vocab();
  CHECK(v.count(WordClass::ActionVerb) >= 16);
  for (auto w : {"analyse", "explore", "compute", "transform", "search", "give", "show",
                 "plot", "classify", "cluster", "understand", "remove", "exclude",
                 "pause", "resume", "stop"}) {
    INFO(w);
    CHECK(v.lookup(w, WordClass::ActionVerb).has_value());
  }
  for (auto w : {"data", "dataset", "collection", "table", "sheet", "attribute", "column",
                 "correlation", "cluster", "plot", "statistics"}) {
    INFO(w);
    CHECK(v.lookup(w, WordClass::ObjectNoun).has_value());
  }
  CHECK(v.version().rfind("vocab-", 0) == 0);
  CHECK(v.version().size() == 18);
}

TEST_CASE("vocabulary validation") {
  CHECK_THROWS_AS(Vocabulary::from_json_text(R"([
    {"lemma": "analyse", "word_class": "ActionVerb", "action_class": "Correlate"},
    {"lemma": "study", "word_class": "ActionVerb", "action_class": "Cluster", "synonyms": ["analyse"]}
  ])"),
                  DisjointnessError);
  CHECK_THROWS_AS(Vocabulary::from_json_text(
                      R"([{"lemma": "x", "word_class": "Adverb"}])"),
                  SchemaError);
  CHECK_THROWS_AS(Vocabulary::from_json_text(R"([{"lemma": "Big Word", "word_class": "Modifier"}])"),
                  SchemaError);
  CHECK_THROWS_AS(Vocabulary::from_json_text(R"({"lemma": "x"})"), SchemaError);
  CHECK_THROWS_AS(load_vocabulary("/nonexistent/vocab.json"), SchemaError);
  try {
    Vocabulary::from_json_text("[\n{\"lemma\": \"a\",\n oops}\n]", "v.json");
    FAIL("expected failure");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    Vocabulary::from_json_text(R"([{"lemma": "a", "word_class": "ActionVerb", "action_class": "Dance"}])");
    FAIL("expected failure");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("action_class") != std::string::npos);
  }
  // The same word may be a verb and a noun.
  auto ok = Vocabulary::from_json_text(R"([
    {"lemma": "plot", "word_class": "ActionVerb", "action_class": "PlotRequest"},
    {"lemma": "plot", "word_class": "ObjectNoun"}
  ])");
  CHECK(ok.entries().size() == 2);
}

TEST_CASE("parse: conversation utterances") {
  CHECK(action_of("I want to explore a data collection?") == ActionClass::ExploreHandshake);
  CHECK(action_of("Help me to analyse my data") == ActionClass::ExploreHandshake);
  CHECK(action_of("I want to understand the data further.") == ActionClass::Cluster);
  auto t = parse("Transform only the first sheet.", vocab());
  CHECK(t.action == ActionClass::TransformData);
  REQUIRE(t.slots.sheet_selector);
  CHECK(t.slots.sheet_selector->mode == convex::tabular::SheetSelection::Mode::First);
  CHECK(action_of("Analyse the linear correlation between each couple of numerical "
                  "attributes in the dataset") == ActionClass::Correlate);
  auto u = parse("florble the wugs", vocab());
  CHECK(u.action == ActionClass::Unknown);
  CHECK(u.slots.empty());
  CHECK(u.matched_terms.empty());
}

TEST_CASE("parse: a display verb naming a plot kind asks for the plot") {
  CHECK(action_of("display the cluster centroids") == ActionClass::PlotRequest);
  CHECK(action_of("show the correlation heatmap") == ActionClass::PlotRequest);
  CHECK(action_of("show the correlation between the columns") == ActionClass::Correlate);
  CHECK(action_of("show me the clusters") == ActionClass::Cluster);
}

TEST_CASE("parse: yes and no depend on a pending question") {
  SessionContext pending;
  pending.question_pending = true;
  CHECK(action_of("Ok.", pending) == ActionClass::AcceptSuggestion);
  CHECK(action_of("yes please", pending) == ActionClass::AcceptSuggestion);
  CHECK(action_of("no", pending) == ActionClass::RejectSuggestion);
  CHECK(action_of("Ok.") == ActionClass::Unknown);
  CHECK(action_of("no") == ActionClass::Unknown);
  // A verb still wins over the reply word.
  CHECK(action_of("ok, cluster the data", pending) == ActionClass::Cluster);
}

TEST_CASE("parse: confidence levels") {
  CHECK(parse("analyse", vocab()).confidence == Confidence::Exact);
  CHECK(parse("exploring", vocab()).confidence == Confidence::Exact);
  CHECK(parse("examine", vocab()).confidence == Confidence::Synonym);
  auto f = parse("anlayse my data", vocab());
  CHECK(f.action == ActionClass::ExploreHandshake);
  CHECK(f.confidence == Confidence::Fuzzy);
  // Words shorter than five letters never match fuzzily.
  CHECK(action_of("shwo") == ActionClass::Unknown);
  CHECK(action_of("plto") == ActionClass::Unknown);
}

TEST_CASE("parse: slots") {
  SessionContext ctx;
  ctx.column_names = {"country", "gdp", "Political score", "x"};
  auto a = parse("remove Political score and GDP", vocab(), ctx);
  CHECK(a.action == ActionClass::ExcludeAttribute);
  CHECK(a.slots.attribute_names == std::vector<std::string>{"Political score", "gdp"});
  auto q = parse("exclude \"x\" please", vocab(), ctx);
  CHECK(q.slots.attribute_names == std::vector<std::string>{"x"});
  auto none = parse("remove gdpx", vocab(), ctx);
  CHECK(none.slots.attribute_names.empty());

  auto k = parse("cluster the data into 4 groups", vocab());
  CHECK(k.slots.k_hint == 4u);
  CHECK(parse("organise my data into three clusters", vocab()).slots.k_hint == 3u);
  CHECK(!parse("compute 4 correlations", vocab()).slots.k_hint);

  auto th = parse("remove attributes correlated above 0,9", vocab());
  CHECK(th.slots.threshold_hint == doctest::Approx(0.9));
  CHECK(!parse("remove attributes above 95", vocab()).slots.threshold_hint);

  CHECK(parse("I like this heatmap", vocab()).slots.rating == Rating::Like);
  CHECK(parse("I don't like this", vocab()).slots.rating == Rating::Dislike);
  CHECK(parse("that is not useful", vocab()).slots.rating == Rating::Dislike);
  CHECK(action_of("I would like to cluster the data") == ActionClass::Cluster);

  CHECK(parse("both please", vocab(), {true, {}, {}}).slots.description == "both");
  CHECK(parse("a structural and statistical description", vocab()).slots.description == "both");
  CHECK(parse("plot the elbow", vocab()).slots.plot_kind == "elbow");

  SessionContext sheets;
  sheets.sheet_names = {"Sheet1", "GSNI 2023"};
  auto s = parse("transform gsni 2023 and sheet1", vocab(), sheets);
  REQUIRE(s.slots.sheet_selector);
  CHECK(s.slots.sheet_selector->names == std::vector<std::string>{"GSNI 2023", "Sheet1"});
  // "each"/"every" without a sheet context fills nothing.
  CHECK(!parse("correlate every attribute", vocab()).slots.sheet_selector);
}

TEST_CASE("parse never reports attributes absent from the table") {
  SessionContext ctx;
  ctx.column_names = {"alpha", "beta"};
  for (auto u : {"remove gamma", "exclude alpha and delta", "cluster beta alpha", "x"}) {
    for (const auto& a : parse(u, vocab(), ctx).slots.attribute_names) {
      CHECK((a == "alpha" || a == "beta"));
    }
  }
}

TEST_CASE("synonym closure over the shipped vocabulary") {
  SessionContext pending;
  pending.question_pending = true;
  for (const auto& e : vocab().entries()) {
    ActionClass lemma_action = parse(e.lemma, vocab(), pending).action;
    for (const auto& s : e.synonyms) {
      INFO(e.lemma << " / " << s);
      CHECK(parse(s, vocab(), pending).action == lemma_action);
    }
    for (const auto& f : e.forms) {
      INFO(e.lemma << " / " << f);
      CHECK(parse(f, vocab(), pending).action == lemma_action);
    }
  }
}

TEST_CASE("parse is total and deterministic") {
  const char* samples[] = {"", "   ", "?", "12", "0,5", "cluster cluster cluster",
                           "\xff\xfe", "ÉTUDIER les données", "plot plot 3 0.2"};
  for (auto s : samples) {
    auto a = parse(s, vocab());
    auto b = parse(s, vocab());
    CHECK(to_json(a) == to_json(b));
    if (a.action == ActionClass::Unknown) CHECK(a.slots.empty());
  }
}

TEST_CASE("intent json round trip") {
  SessionContext ctx;
  ctx.column_names = {"gdp"};
  ctx.sheet_names = {"Sheet1"};
  for (auto u : {"transform Sheet1", "cluster into 3 groups", "remove gdp above 0.9",
                 "I dislike it", "plot a histogram", "statistical"}) {
    auto i = parse(u, vocab(), ctx);
    CHECK(to_json(intent_from_json(to_json(i))) == to_json(i));
  }
}

TEST_CASE("labelled intent corpus") {
  auto j = nlohmann::json::parse(
      convex::read_file(convex::data_dir() + "/intent_corpus.json"));
  size_t total = 0, correct = 0, verbatim = 0, verbatim_correct = 0;
  for (const auto& u : j.at("utterances")) {
    SessionContext ctx;
    ctx.question_pending = u.value("question_pending", false);
    ctx.column_names = j.at("columns").get<std::vector<std::string>>();
    ctx.sheet_names = j.at("sheets").get<std::vector<std::string>>();
    auto i = parse(u.at("text").get<std::string>(), vocab(), ctx);
    bool ok = to_string(i.action) == u.at("action").get<std::string>();
    ++total;
    correct += ok;
    if (u.value("verbatim", false)) {
      ++verbatim;
      verbatim_correct += ok;
    }
  }
  CHECK(total == 30);
  CHECK(verbatim >= 8);
  CHECK(correct * 10 >= total * 9);
  CHECK(verbatim_correct == verbatim);
}
