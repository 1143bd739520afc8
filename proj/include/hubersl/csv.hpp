#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hubersl/types.hpp"

namespace hubersl {

/// Header plus string cells. Rows all have header.size() fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or std::nullopt.
  [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// Throws DataError with line context on ragged rows or unterminated quotes.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv_string(const CsvTable& table);

/// 17 significant digits, so the text parses back to the same double.
std::string format_double(double value);

/// Strict decimal parse; throws DataError naming the row and column.
double parse_double(const std::string& cell, std::size_t row, const std::string& column);

/// All columns except `outcome` (and `treatment`, which is also kept as a
/// feature) become features. Row numbers in errors count the header as row 1.
Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome,
                         const std::optional<std::string>& treatment = std::nullopt);

/// Feature matrix from named columns, in the given order.
Matrix features_from_csv(const CsvTable& table, const std::vector<std::string>& columns);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace hubersl
