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
#include <string>
#include <string_view>

#include "convex/common/error.hpp"

namespace convex {

CONVEX_DEFINE_ERROR(CatalogError, "message_catalog");

// Bot wording: key -> template text with {slot} placeholders.
class MessageCatalog {
 public:
  static MessageCatalog from_json_text(std::string_view text,
                                       std::string_view origin = "messages");

  bool contains(std::string_view key) const;
  // Throws CatalogError for an unknown key.
  const std::string& text(std::string_view key) const;
  std::string render(std::string_view key,
                     const std::map<std::string, std::string>& vars = {}) const;
  // "messages-" followed by the first 12 hex digits of the file's SHA-256.
  const std::string& version() const { return version_; }

 private:
  std::map<std::string, std::string, std::less<>> messages_;
  std::string version_;
};

MessageCatalog load_catalog(const std::string& path);
const MessageCatalog& default_catalog();

}  // namespace convex
