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

#include "convex/intent/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "convex/common/text.hpp"

namespace convex::intent {

namespace {

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Lowercase with every non-alphanumeric run collapsed to one space, padded
// with spaces so whole-word search is a plain substring search.
std::string normalize_words(std::string_view s) {
  std::string out = " ";
  for (char c : s) {
    if (is_alnum(c)) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (out.back() != ' ') {
      out += ' ';
    }
  }
  if (out.back() != ' ') out += ' ';
  return out;
}

// Position of the first whole-word occurrence of `name` in `text`, both
// already normalized.
std::optional<size_t> find_words(const std::string& text, const std::string& name) {
  if (name.size() <= 2) return std::nullopt;  // only separators
  auto pos = text.find(name);
  if (pos == std::string::npos) return std::nullopt;
  return pos;
}

bool is_negation(const std::string& w) {
  return w == "not" || w == "don" || w == "dont" || w == "never" ||
         w == "doesn" || w == "didn" || w == "isn" || w == "wasn";
}

struct Hit {
  size_t token = 0;
  size_t entry = 0;
  Confidence confidence = Confidence::Exact;
};

Confidence confidence_of(MatchKind k) {
  return k == MatchKind::Synonym ? Confidence::Synonym : Confidence::Exact;
}

Confidence weaker(Confidence a, Confidence b) {
  return static_cast<int>(a) > static_cast<int>(b) ? a : b;
}

bool is_reply_topic(const std::optional<ActionClass>& t) {
  return t && (*t == ActionClass::AcceptSuggestion ||
               *t == ActionClass::RejectSuggestion);
}

}  // namespace

std::vector<Token> tokenize(std::string_view u, const Vocabulary* vocabulary) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < u.size()) {
    if (!is_alnum(u[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < u.size() && is_alnum(u[j])) ++j;
    std::string_view run = u.substr(i, j - i);
    bool numeric = std::all_of(run.begin(), run.end(), is_digit);
    if (numeric) {
      std::string digits(run);
      // "0.95" and "0,95": a separator between two digits joins a fraction.
      if (j + 1 < u.size() && (u[j] == '.' || u[j] == ',') && is_digit(u[j + 1])) {
        size_t k = j + 1;
        while (k < u.size() && is_digit(u[k])) ++k;
        if (k >= u.size() || !is_alnum(u[k])) {
          digits += '.';
          digits += u.substr(j + 1, k - j - 1);
          j = k;
        }
      }
      Token t{Token::Kind::Number, digits, 0};
      std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
      out.push_back(std::move(t));
    } else {
      std::string w = to_lower(run);
      if (vocabulary && w.size() > 3 && w.back() == 's' && !vocabulary->contains(w)) {
        std::string stem = w.substr(0, w.size() - 1);
        if (vocabulary->contains(stem)) w = std::move(stem);
      }
      out.push_back({Token::Kind::Word, std::move(w), 0});
    }
    i = j;
  }
  return out;
}

size_t damerau_levenshtein(std::string_view a, std::string_view b) {
  const size_t n = a.size(), m = b.size();
  std::vector<std::vector<size_t>> d(n + 1, std::vector<size_t>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
      }
    }
  }
  return d[n][m];
}

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::Exact: return "Exact";
    case Confidence::Synonym: return "Synonym";
    case Confidence::Fuzzy: return "Fuzzy";
  }
  return "Exact";
}

std::string_view to_string(Rating r) { return r == Rating::Like ? "like" : "dislike"; }

std::optional<Rating> rating_from_string(std::string_view s) {
  if (s == "like") return Rating::Like;
  if (s == "dislike") return Rating::Dislike;
  return std::nullopt;
}

bool Slots::empty() const {
  return attribute_names.empty() && !sheet_selector && !k_hint && !threshold_hint &&
         !rating && !description && !plot_kind;
}

Intent parse(std::string_view utterance, const Vocabulary& vocab,
             const SessionContext& ctx) {
  const auto tokens = tokenize(utterance, &vocab);
  const auto& entries = vocab.entries();

  std::vector<Hit> verbs, others;
  for (size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].kind != Token::Kind::Word) continue;
    if (auto m = vocab.lookup(tokens[t].text, WordClass::ActionVerb)) {
      // "would like" and "I'd like" express a wish, not a rating.
      const auto& e = entries[m->entry];
      const bool wish = e.slot && e.slot->first == "rating" && t > 0 &&
                        (tokens[t - 1].text == "would" || tokens[t - 1].text == "d");
      if (!wish) verbs.push_back({t, m->entry, confidence_of(m->kind)});
    }
    for (auto wc : {WordClass::ObjectNoun, WordClass::Modifier}) {
      if (auto m = vocab.lookup(tokens[t].text, wc)) {
        others.push_back({t, m->entry, confidence_of(m->kind)});
      }
    }
  }
  if (verbs.empty()) {
    // Fuzzy fallback only when nothing matched literally.
    const auto spellings = vocab.spellings(WordClass::ActionVerb);
    for (size_t t = 0; t < tokens.size() && verbs.empty(); ++t) {
      const auto& w = tokens[t].text;
      if (tokens[t].kind != Token::Kind::Word || w.size() < 5 || vocab.contains(w)) {
        continue;
      }
      for (const auto& [s, entry] : spellings) {
        if (s.size() >= 5 && damerau_levenshtein(w, s) == 1) {
          verbs.push_back({t, entry, Confidence::Fuzzy});
          break;
        }
      }
    }
  }

  Intent intent;
  std::optional<Hit> decider;
  auto first_topic = [&]() -> std::optional<Hit> {
    for (const auto& h : others) {
      if (entries[h.entry].topic && !is_reply_topic(entries[h.entry].topic)) return h;
    }
    return std::nullopt;
  };

  const Token* first_word = nullptr;
  for (const auto& t : tokens) {
    if (t.kind == Token::Kind::Word) {
      first_word = &t;
      break;
    }
  }
  std::optional<Hit> reply;
  if (ctx.question_pending && first_word && !others.empty() &&
      &tokens[others.front().token] == first_word &&
      is_reply_topic(entries[others.front().entry].topic)) {
    reply = others.front();
  }

  if (reply && verbs.empty()) {
    intent.action = *entries[reply->entry].topic;
    intent.confidence = reply->confidence;
  } else if (!verbs.empty()) {
    // A generic verb defers to a topical word, then to the first specific
    // verb after it, then to its own default.
    const Hit& v = verbs.front();
    const auto& ve = entries[v.entry];
    intent.action = *ve.action_class;
    intent.confidence = v.confidence;
    // "show the cluster centroids" asks for the plot, not the clustering.
    const bool names_plot = std::any_of(others.begin(), others.end(), [&](const Hit& h) {
      return entries[h.entry].slot && entries[h.entry].slot->first == "plot_kind";
    });
    if (ve.generic && !(intent.action == ActionClass::PlotRequest && names_plot)) {
      if (auto topic = first_topic()) {
        intent.action = *entries[topic->entry].topic;
        intent.confidence = weaker(v.confidence, topic->confidence);
      } else {
        for (size_t i = 1; i < verbs.size(); ++i) {
          if (!entries[verbs[i].entry].generic) {
            intent.action = *entries[verbs[i].entry].action_class;
            intent.confidence = weaker(v.confidence, verbs[i].confidence);
            break;
          }
        }
      }
    }
  } else if (auto topic = first_topic()) {
    intent.action = *entries[topic->entry].topic;
    intent.confidence = topic->confidence;
  } else {
    return intent;  // Unknown, no slots
  }

  {
    std::vector<Hit> all = verbs;
    for (const auto& h : others) {
      bool seen = std::any_of(verbs.begin(), verbs.end(),
                              [&](const Hit& v) { return v.token == h.token; });
      if (!seen) all.push_back(h);
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Hit& a, const Hit& b) { return a.token < b.token; });
    for (const auto& h : all) {
      intent.matched_terms.emplace_back(tokens[h.token].text, entries[h.entry].lemma);
    }
  }

  // Slots.
  Slots& slots = intent.slots;
  const std::string norm = normalize_words(utterance);
  {
    std::vector<std::pair<size_t, std::string>> found;
    for (const auto& c : ctx.column_names) {
      if (auto pos = find_words(norm, normalize_words(c))) found.emplace_back(*pos, c);
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, c] : found) slots.attribute_names.push_back(std::move(c));
  }

  bool sheet_noun = false;
  std::optional<std::string> selector_word;
  std::optional<size_t> number_word;
  bool statistical = false, structural = false, both = false;
  for (const auto& h : others) {
    const auto& e = entries[h.entry];
    if (e.lemma == "sheet") sheet_noun = true;
    if (!e.slot) continue;
    const auto& [name, value] = *e.slot;
    if (name == "sheet_selector" && !selector_word) selector_word = value;
    if (name == "number" && !number_word) number_word = std::stoul(value);
    if (name == "plot_kind" && !slots.plot_kind) slots.plot_kind = value;
    if (name == "description") {
      statistical |= value == "statistical";
      structural |= value == "structural";
      both |= value == "both";
    }
  }
  auto negated_at = [&](size_t token) {
    bool negated = false;
    for (size_t back = 1; back <= 3 && back <= token; ++back) {
      negated |= is_negation(tokens[token - back].text);
    }
    return negated;
  };
  // The first rating-bearing word wins, verbs before other words.
  for (const auto* list : {&verbs, &others}) {
    for (const auto& h : *list) {
      const auto& e = entries[h.entry];
      if (slots.rating || !(e.slot && e.slot->first == "rating")) continue;
      slots.rating = rating_from_string(e.slot->second);
      if (slots.rating && negated_at(h.token)) {
        slots.rating = *slots.rating == Rating::Like ? Rating::Dislike : Rating::Like;
      }
    }
  }
  if (both || (statistical && structural)) slots.description = "both";
  else if (statistical) slots.description = "statistical";
  else if (structural) slots.description = "structural";

  {
    std::vector<std::pair<size_t, std::string>> found;
    for (const auto& s : ctx.sheet_names) {
      if (auto pos = find_words(norm, normalize_words(s))) found.emplace_back(*pos, s);
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const bool sheet_context = sheet_noun || intent.action == ActionClass::TransformData ||
                               intent.action == ActionClass::SelectSheet;
    if (!found.empty()) {
      std::vector<std::string> names;
      for (auto& [_, s] : found) names.push_back(std::move(s));
      slots.sheet_selector = tabular::SheetSelection::only(std::move(names));
    } else if (sheet_context && selector_word) {
      slots.sheet_selector = *selector_word == "first" ? tabular::SheetSelection::first()
                                                       : tabular::SheetSelection::all();
    }
  }

  for (const auto& t : tokens) {
    if (t.kind != Token::Kind::Number) continue;
    if (!slots.threshold_hint && t.number > 0 && t.number < 1) slots.threshold_hint = t.number;
    if (intent.action == ActionClass::Cluster && !slots.k_hint && t.number >= 1 &&
        t.number == std::floor(t.number) && t.number < 1e6) {
      slots.k_hint = static_cast<size_t>(t.number);
    }
  }
  if (intent.action == ActionClass::Cluster && !slots.k_hint && number_word) {
    slots.k_hint = number_word;
  }
  return intent;
}

nlohmann::json to_json(const Intent& intent) {
  nlohmann::json slots = nlohmann::json::object();
  const Slots& s = intent.slots;
  if (!s.attribute_names.empty()) slots["attribute_names"] = s.attribute_names;
  if (s.sheet_selector) {
    slots["sheet_selector"] = {{"mode", s.sheet_selector->mode == tabular::SheetSelection::Mode::All
                                            ? "all"
                                        : s.sheet_selector->mode == tabular::SheetSelection::Mode::First
                                            ? "first"
                                            : "names"},
                               {"names", s.sheet_selector->names}};
  }
  if (s.k_hint) slots["k_hint"] = *s.k_hint;
  if (s.threshold_hint) slots["threshold_hint"] = *s.threshold_hint;
  if (s.rating) slots["rating"] = to_string(*s.rating);
  if (s.description) slots["description"] = *s.description;
  if (s.plot_kind) slots["plot_kind"] = *s.plot_kind;
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [tok, lemma] : intent.matched_terms) terms.push_back({tok, lemma});
  return {{"action", to_string(intent.action)},
          {"slots", slots},
          {"confidence", to_string(intent.confidence)},
          {"matched_terms", terms}};
}

Intent intent_from_json(const nlohmann::json& j) {
  Intent i;
  i.action = action_from_string(j.at("action").get<std::string>()).value_or(ActionClass::Unknown);
  const auto c = j.at("confidence").get<std::string>();
  i.confidence = c == "Fuzzy" ? Confidence::Fuzzy
                 : c == "Synonym" ? Confidence::Synonym
                                  : Confidence::Exact;
  const auto& s = j.at("slots");
  if (s.contains("attribute_names")) {
    i.slots.attribute_names = s["attribute_names"].get<std::vector<std::string>>();
  }
  if (s.contains("sheet_selector")) {
    const auto mode = s["sheet_selector"].at("mode").get<std::string>();
    auto names = s["sheet_selector"].at("names").get<std::vector<std::string>>();
    i.slots.sheet_selector = mode == "first"   ? tabular::SheetSelection::first()
                             : mode == "names" ? tabular::SheetSelection::only(names)
                                               : tabular::SheetSelection::all();
  }
  if (s.contains("k_hint")) i.slots.k_hint = s["k_hint"].get<size_t>();
  if (s.contains("threshold_hint")) i.slots.threshold_hint = s["threshold_hint"].get<double>();
  if (s.contains("rating")) i.slots.rating = rating_from_string(s["rating"].get<std::string>());
  if (s.contains("description")) i.slots.description = s["description"].get<std::string>();
  if (s.contains("plot_kind")) i.slots.plot_kind = s["plot_kind"].get<std::string>();
  for (const auto& t : j.at("matched_terms")) {
    i.matched_terms.emplace_back(t.at(0).get<std::string>(), t.at(1).get<std::string>());
  }
  return i;
}

}  // namespace convex::intent
