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

#include "convex/tabular/csv.hpp"

#include <optional>
#include <vector>

#include "convex/common/text.hpp"

namespace convex::tabular {

RaggedRowError::RaggedRowError(size_t row, size_t width, size_t expected)
    : Error("ragged_row", "row " + std::to_string(row) + " has " +
                              std::to_string(width) + " fields, expected " +
                              std::to_string(expected)),
      row_(row) {}

namespace {

using Record = std::vector<std::string>;

std::vector<Record> read_records(std::string_view in, char delim) {
  if (in.substr(0, 3) == "\xEF\xBB\xBF") in.remove_prefix(3);
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t i = 0;
  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };
  while (i < in.size()) {
    char c = in[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < in.size() && in[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == delim) {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < in.size() && in[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n') {
      end_record();
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw CsvSyntaxError("unterminated quoted field");
  if (field_started || !current.empty()) end_record();
  return records;
}

bool needs_quotes(std::string_view s, char delim) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == delim || c == '"' || c == '\n' || c == '\r') return true;
  }
  return s.front() == ' ' || s.back() == ' ' || s.front() == '\t' ||
         s.back() == '\t';
}

void append_field(std::string& out, std::string_view s, char delim) {
  if (!needs_quotes(s, delim)) {
    out += s;
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Table parse_csv(std::string_view bytes, char delimiter,
                std::string table_name) {
  auto records = read_records(bytes, delimiter);
  if (records.empty()) throw HeaderError("missing header row");
  const Record header = records.front();
  const size_t width = header.size();

  std::vector<Record> rows;
  for (size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    bool blank = rec.size() == 1 && rec[0].empty();
    if (blank && width > 1) continue;
    if (rec.size() != width) {
      throw RaggedRowError(rows.size() + 1, rec.size(), width);
    }
    rows.push_back(std::move(rec));
  }

  std::vector<Column> columns;
  columns.reserve(width);
  for (size_t c = 0; c < width; ++c) {
    std::string name(trim(header[c]));
    if (name.empty()) {
      throw HeaderError("header field " + std::to_string(c + 1) +
                        " is empty");
    }
    bool numeric = true;
    std::vector<std::optional<double>> nums;
    nums.reserve(rows.size());
    for (const auto& row : rows) {
      const std::string& cell = row[c];
      if (cell.empty()) {
        nums.emplace_back();
        continue;
      }
      auto v = parse_decimal(cell);
      if (!v) {
        numeric = false;
        break;
      }
      nums.emplace_back(*v);
    }
    if (numeric) {
      columns.push_back(Column::numeric(std::move(name), std::move(nums)));
      continue;
    }
    std::vector<std::optional<std::string>> texts;
    texts.reserve(rows.size());
    for (const auto& row : rows) {
      if (row[c].empty()) {
        texts.emplace_back();
      } else {
        texts.emplace_back(row[c]);
      }
    }
    columns.push_back(Column::text(std::move(name), std::move(texts)));
  }
  return Table(std::move(table_name), std::move(columns));
}

std::string serialize_csv(const Table& table, char delimiter) {
  std::string out;
  for (size_t c = 0; c < table.n_cols(); ++c) {
    if (c) out.push_back(delimiter);
    append_field(out, table.column(c).name(), delimiter);
  }
  out.push_back('\n');
  for (size_t r = 0; r < table.n_rows(); ++r) {
    // A missing cell in a one-column table is written as a blank line.
    for (size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out.push_back(delimiter);
      append_field(out, table.column(c).cell_text(r), delimiter);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace convex::tabular
