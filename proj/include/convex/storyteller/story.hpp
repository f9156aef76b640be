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

#include <string>
#include <vector>

#include "convex/common/catalog.hpp"
#include "convex/common/error.hpp"
#include "convex/executor/session.hpp"

namespace convex::storyteller {

CONVEX_DEFINE_ERROR(EmptySessionError, "empty_session");

struct StorySection {
  std::string heading;
  std::vector<std::string> artifact_ids;
};

struct StoryDoc {
  std::string title;
  std::vector<StorySection> sections;  // in document order
  std::string markdown;
};

// Markdown story of the session: title, dataset overview, one section per
// completed analysis in conversation order, timeline and conclusions.
// Artifacts are referenced as artifacts/<sha256>.<ext>.
StoryDoc build_story(const executor::Session& session,
                     const MessageCatalog& catalog = default_catalog());

// Markdown table for profile, correlation and cluster artifacts; empty for
// other kinds.
std::string artifact_table(const executor::Artifact& a, const std::string& bytes);

// Every artifacts/<sha>.<ext> reference in `markdown`.
std::vector<std::string> artifact_references(const std::string& markdown);

}  // namespace convex::storyteller
