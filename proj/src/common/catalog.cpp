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

#include "convex/common/catalog.hpp"

#include <nlohmann/json.hpp>

#include "convex/common/digest.hpp"
#include "convex/common/files.hpp"
#include "convex/common/text.hpp"

namespace convex {

MessageCatalog MessageCatalog::from_json_text(std::string_view text,
                                              std::string_view origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError(std::string(origin) + ": " + e.what());
  }
  if (!j.is_object() || j.value("schema_version", 0) != 1) {
    throw CatalogError(std::string(origin) + ": expected schema_version 1");
  }
  if (!j.contains("messages") || !j["messages"].is_object()) {
    throw CatalogError(std::string(origin) + ": missing messages object");
  }
  MessageCatalog c;
  for (const auto& [key, value] : j["messages"].items()) {
    if (!value.is_string() || value.get<std::string>().empty()) {
      throw CatalogError(std::string(origin) + ": messages." + key +
                         " must be a non-empty string");
    }
    c.messages_[key] = value.get<std::string>();
  }
  c.version_ = "messages-" + sha256_hex(text).substr(0, 12);
  return c;
}

bool MessageCatalog::contains(std::string_view key) const {
  return messages_.find(key) != messages_.end();
}

const std::string& MessageCatalog::text(std::string_view key) const {
  auto it = messages_.find(key);
  if (it == messages_.end()) {
    throw CatalogError("unknown message key '" + std::string(key) + "'");
  }
  return it->second;
}

std::string MessageCatalog::render(
    std::string_view key, const std::map<std::string, std::string>& vars) const {
  return interpolate(text(key), vars);
}

MessageCatalog load_catalog(const std::string& path) {
  return MessageCatalog::from_json_text(read_file(path), path);
}

const MessageCatalog& default_catalog() {
  static const MessageCatalog catalog = load_catalog(data_dir() + "/messages.json");
  return catalog;
}

}  // namespace convex
