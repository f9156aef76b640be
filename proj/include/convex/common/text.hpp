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
#include <vector>

namespace convex {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool ends_with_ci(std::string_view s, std::string_view suffix);

// Fixed-point rendering with `decimals` digits; never emits "-0.00".
std::string format_fixed(double value, int decimals);

// Shortest decimal text that parses back to the same double.
std::string format_roundtrip(double value);

// Replaces every `{name}` with vars[name]; unknown slots are left verbatim.
std::string interpolate(std::string_view tmpl,
                        const std::map<std::string, std::string>& vars);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace convex
