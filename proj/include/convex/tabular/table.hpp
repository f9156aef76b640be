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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convex/common/error.hpp"

namespace convex::tabular {

CONVEX_DEFINE_ERROR(HeaderError, "header_error");
CONVEX_DEFINE_ERROR(SchemaViolation, "table_schema_violation");
CONVEX_DEFINE_ERROR(NoNumericColumnsError, "no_numeric_columns");

enum class DType { Numeric, Text };

const char* to_string(DType dtype);

// Parses the locale-free decimal grammar used for numeric detection:
// optional sign, digits with optional fraction, optional exponent.
// Surrounding blanks are ignored.
std::optional<double> parse_decimal(std::string_view text);

// A named, typed column of optional cells. Missing cells are nullopt.
class Column {
 public:
  static Column numeric(std::string name,
                        std::vector<std::optional<double>> values);
  static Column text(std::string name,
                     std::vector<std::optional<std::string>> values);

  const std::string& name() const { return name_; }
  DType dtype() const { return dtype_; }
  bool is_numeric() const { return dtype_ == DType::Numeric; }
  size_t size() const;
  bool is_missing(size_t row) const;
  size_t missing_count() const;

  // Throws std::logic_error when called on the wrong dtype.
  const std::vector<std::optional<double>>& numbers() const;
  const std::vector<std::optional<std::string>>& texts() const;

  // Rendered cell; empty for Missing.
  std::string cell_text(size_t row) const;

  Column renamed(std::string name) const;

  bool operator==(const Column& other) const = default;

 private:
  Column() = default;

  std::string name_;
  DType dtype_ = DType::Text;
  std::vector<std::optional<double>> numbers_;
  std::vector<std::optional<std::string>> texts_;
};

// Immutable columnar table. Construction validates that names are non-empty
// and unique and that every column has the same length.
class Table {
 public:
  Table(std::string name, std::vector<Column> columns);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  size_t n_rows() const { return n_rows_; }
  size_t n_cols() const { return columns_.size(); }

  const Column& column(size_t i) const { return columns_.at(i); }
  const Column* find(std::string_view name) const;
  std::optional<size_t> index_of(std::string_view name) const;
  std::vector<std::string> column_names() const;

  // New table with only the named columns, in this table's order.
  Table select(const std::vector<std::string>& names) const;
  Table without(const std::vector<std::string>& names) const;

  bool operator==(const Table& other) const = default;

 private:
  std::string name_;
  std::vector<Column> columns_;
  size_t n_rows_ = 0;
};

// Only the Numeric columns, original order preserved.
Table numeric_view(const Table& table);

}  // namespace convex::tabular
