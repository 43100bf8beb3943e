// include/sfl/harness/csv.h
//
// Minimal CSV for numeric reports: comma-separated, no quoting (fields never
// contain commas), reals printed with 6 significant digits.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sfl {

using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  // Column index by name; throws FormatError if absent.
  std::size_t column(const std::string &name) const;
};

std::string FormatReal(double v);  // %.6g

std::string ToCsv(const CsvTable &table);
CsvTable ParseCsv(const std::string &text);

void WriteCsv(const std::filesystem::path &path, const CsvTable &table);
CsvTable ReadCsv(const std::filesystem::path &path);

}  // namespace sfl
