#pragma once

#include <charconv>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "focusqc/errors.hpp"
#include "focusqc/io/atomic_file.hpp"

namespace focusqc {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double value) {
  char buffer[32];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

/// Comma-separated table with a mandatory header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column, or DataError naming the column.
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw DataError("csv is missing required column \"" + name + "\"");
  }
};

namespace detail {

// Splits one CSV record; handles RFC-style double-quoted fields so paths
// containing commas survive a round trip.
inline std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) {
    throw DataError("csv record has an unterminated quoted field: " + line);
  }
  fields.push_back(field);
  return fields;
}

inline std::string escape_csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

}  // namespace detail

/// Parses CSV text (header + records, LF or CRLF endings).
inline CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream stream(text);
  std::string line;
  bool first = true;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = detail::split_csv_record(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw DataError("csv record has " + std::to_string(fields.size()) +
                        " fields but the header has " +
                        std::to_string(table.header.size()) + ": " + line);
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) {
    throw DataError("csv input is empty (no header row)");
  }
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  return parse_csv(read_file(path));
}

/// Serializes a table with LF endings and atomic replacement on disk.
inline std::string format_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out.push_back(',');
    out += detail::escape_csv_field(table.header[i]);
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += detail::escape_csv_field(row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  write_file_atomic(path, format_csv(table));
}

/// Strict numeric field parsers with location-bearing errors.
inline double csv_number(const std::string& field, const std::string& what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    throw DataError("csv field " + what + " is not a number: \"" + field +
                    "\"");
  }
  if (used != field.size()) {
    throw DataError("csv field " + what + " has trailing characters: \"" +
                    field + "\"");
  }
  return value;
}

inline long long csv_integer(const std::string& field,
                             const std::string& what) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(field, &used);
  } catch (const std::exception&) {
    throw DataError("csv field " + what + " is not an integer: \"" + field +
                    "\"");
  }
  if (used != field.size()) {
    throw DataError("csv field " + what + " has trailing characters: \"" +
                    field + "\"");
  }
  return value;
}

}  // namespace focusqc
