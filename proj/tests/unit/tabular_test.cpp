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

#include "doctest.h"

#include <memory>

#include "convex/tabular/csv.hpp"
#include "convex/tabular/ingest.hpp"
#include "convex/tabular/zip.hpp"
#include "support/fixtures.hpp"

using namespace convex::tabular;
using convex::testing::five_sheet_bundle;

TEST_CASE("detect_format") {
  CHECK(detect_format("a,b\n1,2\n", "x.csv") == SourceFormat::Csv);
  CHECK(detect_format("a\tb\n1\t2\n", "x.tsv") == SourceFormat::Tsv);
  CHECK(detect_format(five_sheet_bundle(), "gsni.zip") ==
        SourceFormat::WorkbookBundle);

  // An XLSX is a ZIP without our manifest.
  std::string xlsx = write_zip({{"[Content_Types].xml", "<Types/>"},
                                {"xl/workbook.xml", "<workbook/>"}});
  CHECK(detect_format(xlsx, "GSNI2023.xlsx") ==
        SourceFormat::UnsupportedBinary);
  CHECK(detect_format(std::string("\xD0\xCF\x11\xE0\0\0", 6), "old.xls") ==
        SourceFormat::UnsupportedBinary);
  CHECK(detect_format("caf\xC3\xA9,x\n1,2\n", "u.csv") == SourceFormat::Csv);
  CHECK(detect_format("bad \xFF byte", "u.csv") ==
        SourceFormat::UnsupportedBinary);
}

TEST_CASE("parse_csv infers dtypes") {
  Table t = parse_csv("a,b\n1,x\n2,y\n");
  REQUIRE(t.n_cols() == 2);
  CHECK(t.n_rows() == 2);
  CHECK(t.column(0).dtype() == DType::Numeric);
  CHECK(t.column(0).numbers() ==
        std::vector<std::optional<double>>{1.0, 2.0});
  CHECK(t.column(1).dtype() == DType::Text);
  CHECK(t.column(1).texts() ==
        std::vector<std::optional<std::string>>{"x", "y"});
}

TEST_CASE("parse_csv missing cells") {
  Table t = parse_csv("a\n1\n\n3\n");
  CHECK(t.column(0).numbers() ==
        std::vector<std::optional<double>>{1.0, std::nullopt, 3.0});

  Table wide = parse_csv("a,b\n1,\n,q\n");
  CHECK(wide.column(0).numbers() ==
        std::vector<std::optional<double>>{1.0, std::nullopt});
  CHECK(wide.column(1).texts() ==
        std::vector<std::optional<std::string>>{std::nullopt, "q"});
}

TEST_CASE("parse_csv decimal grammar") {
  CHECK(parse_decimal("-1.5e3") == -1500.0);
  CHECK(parse_decimal("+.5") == 0.5);
  CHECK(parse_decimal("7.") == 7.0);
  CHECK(parse_decimal(" 42 ") == 42.0);
  CHECK_FALSE(parse_decimal("1,5"));
  CHECK_FALSE(parse_decimal("nan"));
  CHECK_FALSE(parse_decimal("inf"));
  CHECK_FALSE(parse_decimal("1e"));
  CHECK_FALSE(parse_decimal("."));
  CHECK_FALSE(parse_decimal("0x10"));
}

TEST_CASE("parse_csv errors") {
  CHECK_THROWS_AS(parse_csv("a,a\n1,2\n"), HeaderError);
  CHECK_THROWS_AS(parse_csv("a,\n1,2\n"), HeaderError);
  CHECK_THROWS_AS(parse_csv(""), HeaderError);
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL("expected RaggedRowError");
  } catch (const RaggedRowError& e) {
    CHECK(e.row() == 2);
  }
  CHECK_THROWS_AS(parse_csv("a\n\"open\n"), CsvSyntaxError);
}

TEST_CASE("parse_csv quoting and line endings") {
  Table t = parse_csv("name,note\r\n\"Doe, J\",\"said \"\"hi\"\"\nthen left\"\r\n");
  CHECK(t.n_rows() == 1);
  CHECK(t.column(0).cell_text(0) == "Doe, J");
  CHECK(t.column(1).cell_text(0) == "said \"hi\"\nthen left");
  CHECK(serialize_csv(t) ==
        "name,note\n\"Doe, J\",\"said \"\"hi\"\"\nthen left\"\n");
}

TEST_CASE("csv round trip property") {
  convex::testing::Rng rng(7);
  const std::vector<std::string> pieces = {"a", "b c", ",", "\"", "\n", "x",
                                           " lead", "é", "1", "-"};
  for (int trial = 0; trial < 200; ++trial) {
    size_t rows = rng.index(6);
    size_t cols = 1 + rng.index(4);
    std::vector<Column> columns;
    for (size_t c = 0; c < cols; ++c) {
      std::string name = "c" + std::to_string(c);
      if (rng.uniform() < 0.5) {
        std::vector<std::optional<double>> v;
        for (size_t r = 0; r < rows; ++r) {
          if (rng.uniform() < 0.2) {
            v.emplace_back();
          } else {
            v.emplace_back(rng.normal() * std::pow(10.0, rng.index(12) - 6.0));
          }
        }
        columns.push_back(Column::numeric(name, v));
      } else {
        std::vector<std::optional<std::string>> v;
        bool has_text = false;
        for (size_t r = 0; r < rows; ++r) {
          if (rng.uniform() < 0.2) {
            v.emplace_back();
            continue;
          }
          std::string s = "t";
          size_t n = rng.index(4);
          for (size_t k = 0; k < n; ++k) s += pieces[rng.index(pieces.size())];
          v.emplace_back(s);
          has_text = true;
        }
        if (!has_text) continue;  // an all-missing column reads back numeric
        columns.push_back(Column::text(name, v));
      }
    }
    if (columns.empty()) continue;
    Table original("data", columns);
    std::string csv = serialize_csv(original);
    Table reparsed = parse_csv(csv, ',', "data");
    REQUIRE(reparsed == original);
    CHECK(serialize_csv(reparsed) == csv);
  }
}

TEST_CASE("ingest workbook bundle with sheet selection") {
  const std::string bundle = five_sheet_bundle();
  const std::string before = bundle;

  auto report = ingest(bundle, "gsni.zip", SheetSelection::only({"Sheet1"}));
  CHECK(report.source_format == SourceFormat::WorkbookBundle);
  CHECK(report.sheets_found == 5);
  CHECK(report.sheets_transformed == std::vector<std::string>{"Sheet1"});
  REQUIRE(report.tables.size() == 1);
  CHECK(report.tables[0].name() == "Sheet1");
  CHECK(report.tables[0].n_rows() == 4);
  CHECK(bundle == before);

  auto first = ingest(bundle, "gsni.zip", SheetSelection::first());
  CHECK(first.sheets_transformed == std::vector<std::string>{"Sheet1"});

  auto all = ingest(bundle, "gsni.zip", SheetSelection::all());
  CHECK(all.tables.size() == 5);
  CHECK(all.tables.size() == all.sheets_transformed.size());
  CHECK(all.warnings.empty());

  CHECK_THROWS_AS(ingest(bundle, "gsni.zip", SheetSelection::only({"Nope"})),
                  UnknownSheetError);
}

TEST_CASE("ingest single csv") {
  auto report = ingest("a,b\n1,2\n", "survey.csv", SheetSelection::all());
  CHECK(report.sheets_found == 1);
  CHECK(report.tables.size() == 1);
  CHECK(report.tables[0].name() == "survey");

  auto tsv = ingest("a\tb\n1\t2\n", "survey.tsv", SheetSelection::all());
  CHECK(tsv.tables[0].n_cols() == 2);

  IngestOptions forced;
  forced.delimiter = ';';
  auto semi = ingest("a;b\n1;2\n", "survey.txt", SheetSelection::all(), forced);
  CHECK(semi.tables[0].n_cols() == 2);
}

TEST_CASE("ingest rejects native xlsx with a remedy") {
  std::string xlsx = write_zip({{"xl/workbook.xml", "<workbook/>"}});
  try {
    ingest(xlsx, "GSNI2023.xlsx", SheetSelection::all());
    FAIL("expected UnsupportedFormatError");
  } catch (const UnsupportedFormatError& e) {
    CHECK(std::string(e.what()).find("convert to CSV or CSV bundle") !=
          std::string::npos);
    CHECK(e.code() == "unsupported_format");
  }
}

namespace {
class FakeXlsxConverter : public FormatConverter {
 public:
  bool accepts(std::string_view, std::string_view hint) const override {
    return hint.ends_with(".xlsx");
  }
  Workbook convert(std::string_view) const override {
    return Workbook{{Sheet{"Converted", "v\n1\n2\n", ','}}};
  }
};
}  // namespace

TEST_CASE("ingest delegates unsupported formats to converters") {
  std::string xlsx = write_zip({{"xl/workbook.xml", "<workbook/>"}});
  std::vector<std::shared_ptr<const FormatConverter>> convs{
      std::make_shared<FakeXlsxConverter>()};
  IngestOptions options;
  options.converters = convs;
  auto report = ingest(xlsx, "f.xlsx", SheetSelection::all(), options);
  CHECK(report.tables.at(0).name() == "Converted");
}

TEST_CASE("malformed bundles") {
  std::string no_file =
      write_zip({{"manifest.json", R"({"sheets":[{"name":"A","file":"a.csv"}]})"}});
  CHECK(detect_format(no_file, "x.zip") == SourceFormat::WorkbookBundle);
  CHECK_THROWS_AS(ingest(no_file, "x.zip", SheetSelection::all()),
                  MalformedBundleError);
  std::string dup = write_zip(
      {{"manifest.json",
        R"({"sheets":[{"name":"A","file":"a.csv"},{"name":"A","file":"a.csv"}]})"},
       {"a.csv", "x\n1\n"}});
  CHECK_THROWS_AS(read_workbook(dup), MalformedBundleError);
}

TEST_CASE("numeric_view") {
  using convex::testing::numeric_column;
  using convex::testing::text_column;
  Table t("t", {numeric_column("a", {1, 2}), text_column("b", {"x", "y"}),
                numeric_column("c", {3, 4})});
  Table nv = numeric_view(t);
  CHECK(nv.column_names() == std::vector<std::string>{"a", "c"});

  Table texts("t", {text_column("b", {"x"})});
  CHECK_THROWS_AS(numeric_view(texts), NoNumericColumnsError);

  Table nums("t", {numeric_column("a", {1}), numeric_column("c", {2})});
  CHECK(numeric_view(nums) == nums);
}

TEST_CASE("table invariants") {
  using convex::testing::numeric_column;
  CHECK_THROWS_AS(Table("t", {numeric_column("a", {1}), numeric_column("a", {2})}),
                  HeaderError);
  CHECK_THROWS_AS(Table("t", {numeric_column("a", {1}), numeric_column("b", {1, 2})}),
                  SchemaViolation);
}

TEST_CASE("zip reader handles deflated entries") {
  // Written by Python's zipfile with ZIP_DEFLATED.
  const std::string deflated(
      "\x50\x4b\x03\x04\x14\x00\x00\x00\x08\x00\x77\x50\x50\x5d\x00\x88\x59\x0b\x0b\x00\x00\x00\x18\x00\x00\x00\x05\x00\x00\x00\x61\x2e\x74\x78\x74\xcb\x48\xcd\xc9\xc9\x57\xc8\x40\x27\xb9\x00\x50\x4b\x01\x02\x14\x03\x14\x00\x00\x00\x08\x00\x77\x50\x50\x5d\x00\x88\x59\x0b\x0b\x00\x00\x00\x18\x00\x00\x00\x05\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x80\x01\x00\x00\x00\x00\x61\x2e\x74\x78\x74\x50\x4b\x05\x06\x00\x00\x00\x00\x01\x00\x01\x00\x33\x00\x00\x00\x2e\x00\x00\x00\x00\x00",
      119);
  auto entries = read_zip(deflated);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].name == "a.txt");
  CHECK(entries[0].data == "hello hello hello hello\n");

  auto stored = read_zip(write_zip({{"b.txt", "plain"}}));
  CHECK(stored.at(0).data == "plain");
}
