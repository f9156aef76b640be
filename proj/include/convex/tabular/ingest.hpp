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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "convex/tabular/table.hpp"

namespace convex::tabular {

class UnsupportedFormatError : public Error {
 public:
  explicit UnsupportedFormatError(const std::string& what);
  const std::string& remedy() const { return remedy_; }

 private:
  std::string remedy_;
};

CONVEX_DEFINE_ERROR(UnknownSheetError, "unknown_sheet");
CONVEX_DEFINE_ERROR(MalformedBundleError, "malformed_bundle");

enum class SourceFormat { Csv, Tsv, WorkbookBundle, UnsupportedBinary };

const char* to_string(SourceFormat format);

struct Sheet {
  std::string name;
  std::string raw_bytes;
  char delimiter = ',';
};

// A multi-sheet collection: a ZIP holding one CSV per sheet plus a
// manifest.json of the form {"sheets":[{"name":..., "file":...}]}.
struct Workbook {
  std::vector<Sheet> sheets;

  std::vector<std::string> sheet_names() const;
};

// Which sheets to transform.
struct SheetSelection {
  enum class Mode { All, First, Names };
  Mode mode = Mode::All;
  std::vector<std::string> names;

  static SheetSelection all() { return {}; }
  static SheetSelection first() { return {Mode::First, {}}; }
  static SheetSelection only(std::vector<std::string> names) {
    return {Mode::Names, std::move(names)};
  }
  // Accepts "all", "first", or a comma-separated list of sheet names.
  static SheetSelection parse(std::string_view text);
  std::string describe() const;
};

struct IngestionReport {
  SourceFormat source_format = SourceFormat::Csv;
  size_t sheets_found = 0;
  std::vector<std::string> sheet_names;
  std::vector<std::string> sheets_transformed;
  std::vector<Table> tables;
  std::vector<std::string> warnings;
};

// Extension point for formats the engine does not read natively (XLSX,
// ODS, ...). A converter turns raw bytes into a Workbook of CSV sheets.
class FormatConverter {
 public:
  virtual ~FormatConverter() = default;
  virtual bool accepts(std::string_view raw_bytes,
                       std::string_view filename_hint) const = 0;
  virtual Workbook convert(std::string_view raw_bytes) const = 0;
};

struct IngestOptions {
  std::optional<char> delimiter;
  std::span<const std::shared_ptr<const FormatConverter>> converters;
};

SourceFormat detect_format(std::string_view raw_bytes,
                           std::string_view filename_hint);

// Throws MalformedBundleError when the archive or manifest is invalid.
Workbook read_workbook(std::string_view raw_bytes);

// Builds a workbook bundle; the inverse of read_workbook.
std::string write_workbook(const Workbook& workbook);

// Sheet names in the upload without transforming anything. Single CSV/TSV
// files count as one sheet named after the file stem.
std::vector<std::string> list_sheets(std::string_view raw_bytes,
                                     std::string_view filename_hint,
                                     const IngestOptions& options = {});

IngestionReport ingest(std::string_view raw_bytes,
                       std::string_view filename_hint,
                       const SheetSelection& selection,
                       const IngestOptions& options = {});

std::string file_stem(std::string_view filename);

nlohmann::json to_json(const IngestionReport& report);

}  // namespace convex::tabular
