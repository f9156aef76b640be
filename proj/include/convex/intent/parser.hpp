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

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "convex/intent/vocabulary.hpp"
#include "convex/tabular/ingest.hpp"

namespace convex::intent {

struct Token {
  enum class Kind { Word, Number };
  Kind kind = Kind::Word;
  std::string text;
  double number = 0;

  bool operator==(const Token&) const = default;
};

// Lowercases, splits on whitespace and punctuation, reads "0.95" and "0,95"
// as numbers and strips a plural "s" when the stem is a vocabulary word.
std::vector<Token> tokenize(std::string_view utterance,
                            const Vocabulary* vocabulary = nullptr);

// Optimal string alignment distance (adjacent transpositions count 1).
size_t damerau_levenshtein(std::string_view a, std::string_view b);

enum class Confidence { Exact, Synonym, Fuzzy };
enum class Rating { Like, Dislike };

std::string_view to_string(Confidence c);
std::string_view to_string(Rating r);
std::optional<Rating> rating_from_string(std::string_view s);

struct Slots {
  std::vector<std::string> attribute_names;
  std::optional<tabular::SheetSelection> sheet_selector;
  std::optional<size_t> k_hint;
  std::optional<double> threshold_hint;
  std::optional<Rating> rating;
  // "statistical", "structural" or "both".
  std::optional<std::string> description;
  std::optional<std::string> plot_kind;

  bool empty() const;
};

struct Intent {
  ActionClass action = ActionClass::Unknown;
  Slots slots;
  Confidence confidence = Confidence::Exact;
  std::vector<std::pair<std::string, std::string>> matched_terms;
};

struct SessionContext {
  bool question_pending = false;
  std::vector<std::string> column_names;
  std::vector<std::string> sheet_names;
};

Intent parse(std::string_view utterance, const Vocabulary& vocabulary,
             const SessionContext& context = {});

nlohmann::json to_json(const Intent& intent);
Intent intent_from_json(const nlohmann::json& j);

}  // namespace convex::intent
