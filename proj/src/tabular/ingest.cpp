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

#include "convex/tabular/ingest.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "convex/common/text.hpp"
#include "convex/tabular/csv.hpp"
#include "convex/tabular/zip.hpp"

namespace convex::tabular {

namespace {

constexpr const char* kRemedy =
    "convert to CSV or CSV bundle (a ZIP with one CSV per sheet and a "
    "manifest.json listing them)";

bool looks_like_text(std::string_view b) {
  size_t i = 0;
  while (i < b.size()) {
    auto c = static_cast<unsigned char>(b[i]);
    if (c == 0) return false;
    size_t extra = c < 0x80 ? 0
                 : (c & 0xE0) == 0xC0 ? 1
                 : (c & 0xF0) == 0xE0 ? 2
                 : (c & 0xF8) == 0xF0 ? 3
                 : 4;
    if (extra == 4) return false;
    for (size_t k = 1; k <= extra; ++k) {
      if (i + k >= b.size()) return false;
      if ((static_cast<unsigned char>(b[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

const ZipEntry* find_entry(const std::vector<ZipEntry>& entries,
                           std::string_view name) {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<size_t> select_indices(const std::vector<std::string>& names,
                                   const SheetSelection& selection) {
  std::vector<size_t> out;
  switch (selection.mode) {
    case SheetSelection::Mode::All:
      for (size_t i = 0; i < names.size(); ++i) out.push_back(i);
      break;
    case SheetSelection::Mode::First:
      if (!names.empty()) out.push_back(0);
      break;
    case SheetSelection::Mode::Names:
      for (const auto& wanted : selection.names) {
        auto it = std::find(names.begin(), names.end(), wanted);
        if (it == names.end()) {
          throw UnknownSheetError("no sheet named '" + wanted +
                                  "'; available: " + join(names, ", "));
        }
        auto idx = static_cast<size_t>(it - names.begin());
        if (std::find(out.begin(), out.end(), idx) == out.end()) {
          out.push_back(idx);
        }
      }
      break;
  }
  return out;
}

Workbook resolve_workbook(std::string_view raw, std::string_view hint,
                          const IngestOptions& options,
                          SourceFormat* format) {
  *format = detect_format(raw, hint);
  switch (*format) {
    case SourceFormat::Csv:
    case SourceFormat::Tsv: {
      char delim = options.delimiter.value_or(
          *format == SourceFormat::Tsv ? '\t' : ',');
      return Workbook{{Sheet{file_stem(hint), std::string(raw), delim}}};
    }
    case SourceFormat::WorkbookBundle:
      return read_workbook(raw);
    case SourceFormat::UnsupportedBinary:
      for (const auto& conv : options.converters) {
        if (conv && conv->accepts(raw, hint)) return conv->convert(raw);
      }
      break;
  }
  throw UnsupportedFormatError("'" + std::string(hint) +
                               "' is not a supported data format");
}

}  // namespace

UnsupportedFormatError::UnsupportedFormatError(const std::string& what)
    : Error("unsupported_format", what + "; " + kRemedy), remedy_(kRemedy) {}

const char* to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::Csv: return "csv";
    case SourceFormat::Tsv: return "tsv";
    case SourceFormat::WorkbookBundle: return "workbook_bundle";
    case SourceFormat::UnsupportedBinary: return "unsupported_binary";
  }
  return "unknown";
}

std::vector<std::string> Workbook::sheet_names() const {
  std::vector<std::string> names;
  for (const auto& s : sheets) names.push_back(s.name);
  return names;
}

SheetSelection SheetSelection::parse(std::string_view text) {
  std::string t = to_lower(trim(text));
  if (t.empty() || t == "all") return all();
  if (t == "first") return first();
  std::vector<std::string> names;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto part = trim(text.substr(start, comma - start));
    if (!part.empty()) names.emplace_back(part);
    start = comma + 1;
  }
  return only(std::move(names));
}

std::string SheetSelection::describe() const {
  switch (mode) {
    case Mode::All: return "all";
    case Mode::First: return "first";
    case Mode::Names: return join(names, ",");
  }
  return "all";
}

std::string file_stem(std::string_view filename) {
  auto slash = filename.find_last_of("/\\");
  if (slash != std::string_view::npos) filename.remove_prefix(slash + 1);
  auto dot = filename.rfind('.');
  if (dot != std::string_view::npos && dot > 0) filename = filename.substr(0, dot);
  return filename.empty() ? std::string("data") : std::string(filename);
}

SourceFormat detect_format(std::string_view raw, std::string_view hint) {
  if (has_zip_magic(raw)) {
    try {
      auto entries = read_zip(raw);
      if (find_entry(entries, "manifest.json")) {
        return SourceFormat::WorkbookBundle;
      }
    } catch (const ZipError&) {
    }
    return SourceFormat::UnsupportedBinary;
  }
  if (raw.empty() || !looks_like_text(raw)) {
    return SourceFormat::UnsupportedBinary;
  }
  if (ends_with_ci(hint, ".tsv") || ends_with_ci(hint, ".tab")) {
    return SourceFormat::Tsv;
  }
  return SourceFormat::Csv;
}

Workbook read_workbook(std::string_view raw) {
  std::vector<ZipEntry> entries;
  try {
    entries = read_zip(raw);
  } catch (const ZipError& e) {
    throw MalformedBundleError(std::string("bundle archive: ") + e.what());
  }
  const ZipEntry* manifest = find_entry(entries, "manifest.json");
  if (!manifest) throw MalformedBundleError("bundle lacks manifest.json");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(manifest->data);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedBundleError(std::string("manifest.json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sheets") ||
      !doc["sheets"].is_array() || doc["sheets"].empty()) {
    throw MalformedBundleError("manifest.json: 'sheets' must be a non-empty array");
  }
  Workbook wb;
  std::set<std::string> seen;
  for (size_t i = 0; i < doc["sheets"].size(); ++i) {
    const auto& s = doc["sheets"][i];
    const std::string where = "manifest.json: sheets[" + std::to_string(i) + "]";
    if (!s.is_object() || !s.contains("name") || !s["name"].is_string() ||
        !s.contains("file") || !s["file"].is_string()) {
      throw MalformedBundleError(where + " needs string 'name' and 'file'");
    }
    auto name = s["name"].get<std::string>();
    auto file = s["file"].get<std::string>();
    if (name.empty() || !seen.insert(name).second) {
      throw MalformedBundleError(where + ": sheet name empty or duplicated");
    }
    const ZipEntry* entry = find_entry(entries, file);
    if (!entry) throw MalformedBundleError(where + ": missing file " + file);
    char delim = ends_with_ci(file, ".tsv") ? '\t' : ',';
    wb.sheets.push_back({std::move(name), entry->data, delim});
  }
  return wb;
}

std::string write_workbook(const Workbook& workbook) {
  nlohmann::json manifest;
  manifest["sheets"] = nlohmann::json::array();
  std::vector<ZipEntry> entries;
  for (size_t i = 0; i < workbook.sheets.size(); ++i) {
    const auto& s = workbook.sheets[i];
    std::string file = "sheet" + std::to_string(i + 1) +
                       (s.delimiter == '\t' ? ".tsv" : ".csv");
    manifest["sheets"].push_back({{"name", s.name}, {"file", file}});
    entries.push_back({file, s.raw_bytes});
  }
  entries.insert(entries.begin(), ZipEntry{"manifest.json", manifest.dump(2)});
  return write_zip(entries);
}

std::vector<std::string> list_sheets(std::string_view raw,
                                     std::string_view hint,
                                     const IngestOptions& options) {
  SourceFormat format;
  return resolve_workbook(raw, hint, options, &format).sheet_names();
}

IngestionReport ingest(std::string_view raw, std::string_view hint,
                       const SheetSelection& selection,
                       const IngestOptions& options) {
  IngestionReport report;
  Workbook wb = resolve_workbook(raw, hint, options, &report.source_format);
  report.sheet_names = wb.sheet_names();
  report.sheets_found = wb.sheets.size();
  auto selected = select_indices(report.sheet_names, selection);
  for (size_t idx : selected) {
    const Sheet& sheet = wb.sheets[idx];
    Table t = parse_csv(sheet.raw_bytes, sheet.delimiter, sheet.name);
    report.sheets_transformed.push_back(sheet.name);
    report.tables.push_back(std::move(t));
  }
  if (selected.size() < wb.sheets.size()) {
    std::vector<std::string> skipped;
    for (size_t i = 0; i < wb.sheets.size(); ++i) {
      if (std::find(selected.begin(), selected.end(), i) == selected.end()) {
        skipped.push_back(wb.sheets[i].name);
      }
    }
    report.warnings.push_back("sheets not transformed: " + join(skipped, ", "));
  }
  for (const auto& t : report.tables) {
    if (t.n_rows() == 0) {
      report.warnings.push_back("sheet '" + t.name() + "' has no data rows");
    }
  }
  return report;
}

nlohmann::json to_json(const IngestionReport& report) {
  nlohmann::json j;
  j["source_format"] = to_string(report.source_format);
  j["sheets_found"] = report.sheets_found;
  j["sheet_names"] = report.sheet_names;
  j["sheets_transformed"] = report.sheets_transformed;
  j["tables"] = nlohmann::json::array();
  for (const auto& t : report.tables) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : t.columns()) {
      cols.push_back({{"name", c.name()}, {"dtype", to_string(c.dtype())}});
    }
    j["tables"].push_back(
        {{"name", t.name()}, {"n_rows", t.n_rows()}, {"columns", cols}});
  }
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace convex::tabular
