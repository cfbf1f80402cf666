#pragma once

#include <string>
#include <vector>

namespace dotlab {

/// Scientific notation with 12 significant digits ("nan" for NaN).
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
  std::size_t column(const std::string& name) const;  // throws DomainError when absent
  std::vector<double> numbers(const std::string& name) const;
  std::string str() const;
};

/// RFC-4180 parser (quoted fields, CRLF or LF line ends). First row is the header.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv_file(const std::string& path);

/// Writes via a temporary sibling file and rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace dotlab
