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

// Scripted conversations shared by the dialogue, store and acceptance tests.

#include <string>

#include "convex/common/files.hpp"
#include "convex/dialogue/dialogue.hpp"

namespace convex::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(CONVEX_TEST_DATA_DIR) + "/fixtures/" + name;
}

inline executor::Session scripted_session(const dialogue::Assistant& bot, std::string id) {
  auto s = bot.open_session(std::move(id));
  s.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return s;
}

// The data preparation, description and correlation steps of the use case,
// ending with the feedback question pending.
inline void test1_until_feedback(const dialogue::Assistant& bot, executor::Session& s,
                                 dialogue::UserProfile& profile) {
  bot.handle_turn(s, "Help me to analyse my data", profile);
  bot.upload(s, "gender_norms.csv", read_file(fixture_path("gender_norms.csv")), std::nullopt,
             profile);
  bot.handle_turn(s, "Give me a statistical description", profile);
  bot.handle_turn(s,
                  "Analyse the linear correlation between each couple of numerical "
                  "attributes in the dataset",
                  profile);
}

inline void test1(const dialogue::Assistant& bot, executor::Session& s,
                  dialogue::UserProfile& profile) {
  test1_until_feedback(bot, s, profile);
  bot.handle_turn(s, "Ok.", profile);
  bot.handle_turn(s, "Goodbye", profile);
}

}  // namespace convex::testing
