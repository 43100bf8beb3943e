// src/harness/csv.cc

#include "sfl/harness/csv.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfl/numerics/errors.h"

namespace sfl {
namespace {

CsvRow SplitLine(const std::string &line) {
  CsvRow fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::size_t CsvTable::column(const std::string &name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw FormatError("CSV has no column '" + name + "'");
}

std::string FormatReal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string ToCsv(const CsvTable &table) {
  std::string out;
  auto put = [&](const CsvRow &row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].find_first_of(",\n") != std::string::npos) {
        throw FormatError("CSV field contains a separator: " + row[i]);
      }
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  };
  put(table.header);
  for (const auto &row : table.rows) {
    if (row.size() != table.header.size()) {
      throw FormatError("CSV row has " + std::to_string(row.size()) +
                        " fields, header has " +
                        std::to_string(table.header.size()));
    }
    put(row);
  }
  return out;
}

CsvTable ParseCsv(const std::string &text) {
  std::istringstream in(text);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.header = SplitLine(line);
      first = false;
      continue;
    }
    CsvRow row = SplitLine(line);
    if (row.size() != table.header.size()) {
      throw FormatError("CSV row has " + std::to_string(row.size()) +
                        " fields, header has " +
                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (first) throw FormatError("empty CSV");
  return table;
}

void WriteCsv(const std::filesystem::path &path, const CsvTable &table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << ToCsv(table);
}

CsvTable ReadCsv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str());
}

}  // namespace sfl
