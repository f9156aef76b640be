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
#include <utility>
#include <vector>

#include "convex/common/error.hpp"

namespace convex::tabular {

CONVEX_DEFINE_ERROR(ZipError, "zip_error");

struct ZipEntry {
  std::string name;
  std::string data;
};

bool has_zip_magic(std::string_view bytes);

// Reads every file entry of a ZIP archive (stored or deflated).
std::vector<ZipEntry> read_zip(std::string_view bytes);

// Writes a ZIP archive with stored (uncompressed) entries.
std::string write_zip(const std::vector<ZipEntry>& entries);

}  // namespace convex::tabular
