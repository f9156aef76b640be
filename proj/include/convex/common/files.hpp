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
#include <string_view>

#include "convex/common/error.hpp"

namespace convex {

CONVEX_DEFINE_ERROR(IoError, "io_error");

// Directory holding the shipped vocabulary, templates and message catalog.
// CONVEX_DATA_DIR overrides the compiled-in default.
std::string data_dir();

std::string read_file(const std::string& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace convex
