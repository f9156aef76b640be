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

#include "convex/tabular/table.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <stdexcept>

#include "convex/common/text.hpp"

namespace convex::tabular {

const char* to_string(DType dtype) {
  return dtype == DType::Numeric ? "numeric" : "text";
}

std::optional<double> parse_decimal(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  size_t i = 0;
  bool plus = false;
  if (text[0] == '+' || text[0] == '-') {
    plus = text[0] == '+';
    ++i;
  }
  size_t int_digits = 0, frac_digits = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i, ++int_digits;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      ++i, ++frac_digits;
    }
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    size_t exp_digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      ++i, ++exp_digits;
    }
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;
  if (plus) text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec == std::errc::result_out_of_range) return std::nullopt;
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

Column Column::numeric(std::string name,
                       std::vector<std::optional<double>> values) {
  Column c;
  c.name_ = std::move(name);
  c.dtype_ = DType::Numeric;
  c.numbers_ = std::move(values);
  return c;
}

Column Column::text(std::string name,
                    std::vector<std::optional<std::string>> values) {
  Column c;
  c.name_ = std::move(name);
  c.dtype_ = DType::Text;
  c.texts_ = std::move(values);
  return c;
}

size_t Column::size() const {
  return is_numeric() ? numbers_.size() : texts_.size();
}

bool Column::is_missing(size_t row) const {
  return is_numeric() ? !numbers_.at(row).has_value()
                      : !texts_.at(row).has_value();
}

size_t Column::missing_count() const {
  size_t n = 0;
  for (size_t r = 0; r < size(); ++r) n += is_missing(r) ? 1 : 0;
  return n;
}

const std::vector<std::optional<double>>& Column::numbers() const {
  if (!is_numeric()) {
    throw std::logic_error("column '" + name_ + "' is not numeric");
  }
  return numbers_;
}

const std::vector<std::optional<std::string>>& Column::texts() const {
  if (is_numeric()) {
    throw std::logic_error("column '" + name_ + "' is not text");
  }
  return texts_;
}

std::string Column::cell_text(size_t row) const {
  if (is_numeric()) {
    const auto& v = numbers_.at(row);
    return v ? format_roundtrip(*v) : std::string();
  }
  const auto& v = texts_.at(row);
  return v ? *v : std::string();
}

Column Column::renamed(std::string name) const {
  Column c = *this;
  c.name_ = std::move(name);
  return c;
}

Table::Table(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  std::set<std::string> seen;
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& c : columns_) {
    if (c.name().empty()) throw HeaderError("column name must not be empty");
    if (!seen.insert(c.name()).second) {
      throw HeaderError("duplicate column name '" + c.name() + "'");
    }
    if (c.size() != n_rows_) {
      throw SchemaViolation("column '" + c.name() + "' has " +
                            std::to_string(c.size()) + " cells, expected " +
                            std::to_string(n_rows_));
    }
  }
}

const Column* Table::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name() == name) return &c;
  }
  return nullptr;
}

std::optional<size_t> Table::index_of(std::string_view name) const {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name() == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name());
  return names;
}

Table Table::select(const std::vector<std::string>& names) const {
  std::vector<Column> cols;
  for (const auto& c : columns_) {
    if (std::find(names.begin(), names.end(), c.name()) != names.end()) {
      cols.push_back(c);
    }
  }
  return Table(name_, std::move(cols));
}

Table Table::without(const std::vector<std::string>& names) const {
  std::vector<Column> cols;
  for (const auto& c : columns_) {
    if (std::find(names.begin(), names.end(), c.name()) == names.end()) {
      cols.push_back(c);
    }
  }
  return Table(name_, std::move(cols));
}

Table numeric_view(const Table& table) {
  std::vector<Column> cols;
  for (const auto& c : table.columns()) {
    if (c.is_numeric()) cols.push_back(c);
  }
  if (cols.empty()) {
    throw NoNumericColumnsError("table '" + table.name() +
                                "' has no numeric columns");
  }
  return Table(table.name(), std::move(cols));
}

}  // namespace convex::tabular
