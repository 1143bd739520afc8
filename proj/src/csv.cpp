#include "hubersl/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

namespace hubersl {

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  return std::nullopt;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  char c;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
    record_line = line;
  };

  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      ++line;
      end_record();
    } else if (c == '\n') {
      ++line;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError(source + ": unterminated quoted field starting near line " + std::to_string(record_line));
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw DataError(source + ": empty CSV (a header row is required)");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError(source + ": row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                      " fields, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, path);
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << quote_if_needed(row[j]);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& r : table.rows) write_row(r);
}

std::string to_csv_string(const CsvTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(const std::string& cell, std::size_t row, const std::string& column) {
  auto fail = [&] {
    throw DataError("row " + std::to_string(row) + ", column '" + column + "': '" + cell + "' is not a number");
  };
  std::size_t b = 0;
  std::size_t e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
  if (b == e) fail();
  const char* first = cell.data() + b;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, cell.data() + e, v);
  if (ec != std::errc() || ptr != cell.data() + e || !std::isfinite(v)) fail();
  return v;
}

Matrix features_from_csv(const CsvTable& table, const std::vector<std::string>& columns) {
  Matrix X(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto idx = table.column(columns[j]);
    if (!idx) throw DataError("missing column '" + columns[j] + "'");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = parse_double(table.rows[r][*idx], r + 2, columns[j]);
    }
  }
  return X;
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome,
                         const std::optional<std::string>& treatment) {
  const auto y_col = table.column(outcome);
  if (!y_col) throw DataError("outcome column '" + outcome + "' not found in header");
  if (table.rows.empty()) throw DataError("CSV has a header but no data rows");
  Dataset d;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j != *y_col) d.feature_names.push_back(table.header[j]);
  }
  d.X = features_from_csv(table, d.feature_names);
  d.y.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    d.y[static_cast<Eigen::Index>(r)] = parse_double(table.rows[r][*y_col], r + 2, outcome);
  }
  if (treatment) {
    const auto t = table.column(*treatment);
    if (!t || *t == *y_col) throw DataError("treatment column '" + *treatment + "' not found among features");
    d.treatment = features_from_csv(table, {*treatment}).col(0);
  }
  return d;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move output into place at '" + path + "': " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace hubersl
