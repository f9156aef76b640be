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

#include <cstddef>
#include <string>
#include <string_view>

#include "convex/tabular/table.hpp"

namespace convex::tabular {

class RaggedRowError : public Error {
 public:
  RaggedRowError(size_t row, size_t width, size_t expected);
  // 1-based data row index (the header is not counted).
  size_t row() const { return row_; }

 private:
  size_t row_;
};

CONVEX_DEFINE_ERROR(CsvSyntaxError, "csv_syntax_error");

// RFC-4180 reader. The first record is the header. A column is Numeric when
// every non-empty cell parses as a decimal; empty cells become Missing.
// Blank lines are skipped for tables wider than one column.
Table parse_csv(std::string_view bytes, char delimiter = ',',
                std::string table_name = "data");

// Writes LF-terminated records, quoting only where needed.
std::string serialize_csv(const Table& table, char delimiter = ',');

}  // namespace convex::tabular
