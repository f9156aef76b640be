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

#include "convex/intent/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "convex/common/digest.hpp"
#include "convex/common/files.hpp"

namespace convex::intent {

namespace {

constexpr std::array<std::pair<ActionClass, std::string_view>, 16> kActions{{
    {ActionClass::ExploreHandshake, "ExploreHandshake"},
    {ActionClass::TransformData, "TransformData"},
    {ActionClass::DescribeStructural, "DescribeStructural"},
    {ActionClass::DescribeStatistical, "DescribeStatistical"},
    {ActionClass::Correlate, "Correlate"},
    {ActionClass::Cluster, "Cluster"},
    {ActionClass::PlotRequest, "PlotRequest"},
    {ActionClass::ExcludeAttribute, "ExcludeAttribute"},
    {ActionClass::SelectSheet, "SelectSheet"},
    {ActionClass::AcceptSuggestion, "AcceptSuggestion"},
    {ActionClass::RejectSuggestion, "RejectSuggestion"},
    {ActionClass::ProvideFeedback, "ProvideFeedback"},
    {ActionClass::PauseSession, "PauseSession"},
    {ActionClass::ResumeSession, "ResumeSession"},
    {ActionClass::EndSession, "EndSession"},
    {ActionClass::Unknown, "Unknown"},
}};

bool valid_word(const std::string& w) {
  if (w.empty()) return false;
  // The tokenizer only ever produces [a-z0-9] runs.
  for (unsigned char c : w) {
    if (!(std::islower(c) || std::isdigit(c))) return false;
  }
  return true;
}

size_t line_of(std::string_view text, size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

std::string_view to_string(ActionClass a) {
  for (const auto& [k, v] : kActions) {
    if (k == a) return v;
  }
  return "Unknown";
}

std::optional<ActionClass> action_from_string(std::string_view s) {
  for (const auto& [k, v] : kActions) {
    if (v == s) return k;
  }
  return std::nullopt;
}

const std::vector<ActionClass>& all_actions() {
  static const std::vector<ActionClass> all = [] {
    std::vector<ActionClass> v;
    for (const auto& [k, _] : kActions) v.push_back(k);
    return v;
  }();
  return all;
}

std::string_view to_string(WordClass w) {
  switch (w) {
    case WordClass::ActionVerb: return "ActionVerb";
    case WordClass::ObjectNoun: return "ObjectNoun";
    case WordClass::Modifier: return "Modifier";
  }
  return "ActionVerb";
}

Vocabulary Vocabulary::from_json_text(std::string_view text,
                                      std::string_view origin) {
  const std::string where(origin);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(where + ": line " + std::to_string(line_of(text, e.byte)) +
                      ": invalid JSON");
  }
  if (!doc.is_array()) throw SchemaError(where + ": top level must be an array");

  Vocabulary v;
  v.version_ = "vocab-" + sha256_hex(text).substr(0, 12);
  for (size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    auto fail = [&](const std::string& field, const std::string& msg) {
      throw SchemaError(where + ": entry " + std::to_string(i) + ": field '" +
                        field + "': " + msg);
    };
    if (!j.is_object()) fail("<entry>", "must be an object");
    for (const auto& [key, _] : j.items()) {
      static const std::vector<std::string> known{
          "lemma", "word_class", "synonyms", "action_class",
          "forms", "generic",    "topic",    "slot"};
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail(key, "unknown field");
      }
    }
    VocabularyEntry e;
    if (!j.contains("lemma") || !j["lemma"].is_string()) fail("lemma", "required string");
    e.lemma = j["lemma"].get<std::string>();
    if (!valid_word(e.lemma)) fail("lemma", "must be lowercase letters and digits");

    if (!j.contains("word_class") || !j["word_class"].is_string()) {
      fail("word_class", "required string");
    }
    const auto wc = j["word_class"].get<std::string>();
    if (wc == "ActionVerb") e.word_class = WordClass::ActionVerb;
    else if (wc == "ObjectNoun") e.word_class = WordClass::ObjectNoun;
    else if (wc == "Modifier") e.word_class = WordClass::Modifier;
    else fail("word_class", "unknown value '" + wc + "'");

    auto word_list = [&](const char* field, std::vector<std::string>& out) {
      if (!j.contains(field)) return;
      if (!j[field].is_array()) fail(field, "must be an array of strings");
      for (const auto& s : j[field]) {
        if (!s.is_string() || !valid_word(s.get<std::string>())) {
          fail(field, "entries must be lowercase letters and digits");
        }
        out.push_back(s.get<std::string>());
      }
    };
    word_list("synonyms", e.synonyms);
    word_list("forms", e.forms);

    auto action_field = [&](const char* field) -> std::optional<ActionClass> {
      if (!j.contains(field)) return std::nullopt;
      if (!j[field].is_string()) fail(field, "must be a string");
      auto a = action_from_string(j[field].get<std::string>());
      if (!a || *a == ActionClass::Unknown) {
        fail(field, "unknown action class '" + j[field].get<std::string>() + "'");
      }
      return a;
    };
    e.action_class = action_field("action_class");
    e.topic = action_field("topic");
    if (e.action_class && e.word_class != WordClass::ActionVerb) {
      fail("action_class", "only verbs carry an action class; use 'topic'");
    }
    if (e.topic && e.word_class == WordClass::ActionVerb) {
      fail("topic", "verbs carry 'action_class' instead");
    }
    if (e.word_class == WordClass::ActionVerb && !e.action_class) {
      fail("action_class", "required for verbs");
    }
    if (j.contains("generic")) {
      if (!j["generic"].is_boolean()) fail("generic", "must be a boolean");
      e.generic = j["generic"].get<bool>();
      if (e.generic && e.word_class != WordClass::ActionVerb) {
        fail("generic", "only verbs can be generic");
      }
    }
    if (j.contains("slot")) {
      const auto& s = j["slot"];
      if (!s.is_object() || !s.contains("name") || !s.contains("value") ||
          !s["name"].is_string() || !s["value"].is_string()) {
        fail("slot", "must be {\"name\": string, \"value\": string}");
      }
      e.slot.emplace(s["name"].get<std::string>(), s["value"].get<std::string>());
    }

    const size_t idx = v.entries_.size();
    auto& index = v.index_[static_cast<int>(e.word_class)];
    auto add = [&](const std::string& w, MatchKind kind) {
      auto [it, inserted] = index.emplace(w, Match{idx, kind});
      if (!inserted && it->second.entry != idx) {
        throw DisjointnessError(where + ": '" + w + "' appears in both '" +
                                v.entries_[it->second.entry].lemma + "' and '" +
                                e.lemma + "' (" + std::string(to_string(e.word_class)) +
                                ")");
      }
    };
    v.entries_.push_back(e);
    add(e.lemma, MatchKind::Lemma);
    for (const auto& f : e.forms) add(f, MatchKind::Form);
    for (const auto& s : e.synonyms) add(s, MatchKind::Synonym);
  }
  return v;
}

std::optional<Match> Vocabulary::lookup(std::string_view word, WordClass wc) const {
  const auto& index = index_[static_cast<int>(wc)];
  auto it = index.find(std::string(word));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  for (const auto& index : index_) {
    if (index.count(std::string(word))) return true;
  }
  return false;
}

std::vector<std::pair<std::string, size_t>> Vocabulary::spellings(WordClass wc) const {
  std::vector<std::pair<std::string, size_t>> out;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.word_class != wc) continue;
    out.emplace_back(e.lemma, i);
    for (const auto& f : e.forms) out.emplace_back(f, i);
    for (const auto& s : e.synonyms) out.emplace_back(s, i);
  }
  return out;
}

size_t Vocabulary::count(WordClass wc) const {
  return static_cast<size_t>(std::count_if(
      entries_.begin(), entries_.end(),
      [wc](const VocabularyEntry& e) { return e.word_class == wc; }));
}

Vocabulary load_vocabulary(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw SchemaError(e.what());
  }
  return Vocabulary::from_json_text(text, path);
}

const Vocabulary& default_vocabulary() {
  static const Vocabulary v = load_vocabulary(data_dir() + "/vocabulary.json");
  return v;
}

}  // namespace convex::intent
