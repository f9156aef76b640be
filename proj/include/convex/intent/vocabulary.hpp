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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convex/common/error.hpp"

namespace convex::intent {

CONVEX_DEFINE_ERROR(SchemaError, "vocabulary_schema");
CONVEX_DEFINE_ERROR(DisjointnessError, "vocabulary_overlap");

enum class ActionClass {
  ExploreHandshake,
  TransformData,
  DescribeStructural,
  DescribeStatistical,
  Correlate,
  Cluster,
  PlotRequest,
  ExcludeAttribute,
  SelectSheet,
  AcceptSuggestion,
  RejectSuggestion,
  ProvideFeedback,
  PauseSession,
  ResumeSession,
  EndSession,
  Unknown,
};

std::string_view to_string(ActionClass a);
std::optional<ActionClass> action_from_string(std::string_view s);
const std::vector<ActionClass>& all_actions();

enum class WordClass { ActionVerb, ObjectNoun, Modifier };

std::string_view to_string(WordClass w);

struct VocabularyEntry {
  std::string lemma;
  WordClass word_class = WordClass::ActionVerb;
  std::vector<std::string> synonyms;
  // Verbs only.
  std::optional<ActionClass> action_class;
  // Inflected spellings matched as the lemma itself.
  std::vector<std::string> forms;
  // A generic verb takes its action from the first topical noun or modifier
  // in the utterance, falling back to action_class.
  bool generic = false;
  // Nouns and modifiers: the action they point a generic verb at.
  std::optional<ActionClass> topic;
  // Slot assignment triggered by the word, e.g. {"plot_kind", "histogram"}.
  std::optional<std::pair<std::string, std::string>> slot;
};

enum class MatchKind { Lemma, Form, Synonym };

struct Match {
  size_t entry = 0;
  MatchKind kind = MatchKind::Lemma;
};

class Vocabulary {
 public:
  // Parses and validates the JSON array form. `origin` names the source in
  // diagnostics.
  static Vocabulary from_json_text(std::string_view text,
                                   std::string_view origin = "vocabulary");

  const std::vector<VocabularyEntry>& entries() const { return entries_; }
  // "vocab-" followed by the first 12 hex digits of the file's SHA-256.
  const std::string& version() const { return version_; }

  std::optional<Match> lookup(std::string_view word, WordClass wc) const;
  bool contains(std::string_view word) const;
  // Every spelling of the given word class, for fuzzy matching.
  std::vector<std::pair<std::string, size_t>> spellings(WordClass wc) const;
  size_t count(WordClass wc) const;

 private:
  std::vector<VocabularyEntry> entries_;
  std::string version_;
  std::map<std::string, Match> index_[3];
};

Vocabulary load_vocabulary(const std::string& path);
// The shipped vocabulary from the data directory.
const Vocabulary& default_vocabulary();

}  // namespace convex::intent
