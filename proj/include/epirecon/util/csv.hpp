#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "epirecon/error.hpp"

namespace epirecon::util {

using epirecon::IoError;

// Shortest decimal string that reads back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Row numbers in the source file, for error messages.
  std::vector<int> line_numbers;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
  int require_column(std::string_view name, const std::string& source) const {
    const int c = column(name);
    if (c < 0) throw InputError(source + ": missing column '" + std::string(name) + "'");
    return c;
  }
};

// RFC-4180 parser. Lines starting with '#' before the header are comments.
inline CsvTable parse_csv(std::string_view text, const std::string& source = "csv") {
  CsvTable t;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, field_started = false, any = false;
  int line = 1, record_line = 1;
  bool at_record_start = true;

  auto end_record = [&] {
    if (any || !record.empty()) {
      record.push_back(field);
      if (t.header.empty()) {
        t.header = record;
      } else {
        t.rows.push_back(record);
        t.line_numbers.push_back(record_line);
      }
    }
    record.clear();
    field.clear();
    any = field_started = false;
    at_record_start = true;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (at_record_start && !in_quotes && ch == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      ++line;
      continue;
    }
    if (at_record_start) {
      record_line = line;
      at_record_start = false;
    }
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) throw InputError(source + ":" + std::to_string(line) + ": stray quote");
        in_quotes = field_started = any = true;
        break;
      case ',':
        record.push_back(field);
        field.clear();
        field_started = false;
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += ch;
        field_started = any = true;
    }
  }
  if (in_quotes) throw InputError(source + ": unterminated quoted field");
  end_record();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) {
      throw InputError(source + ":" + std::to_string(t.line_numbers[r]) + ": expected " +
                       std::to_string(t.header.size()) + " fields");
    }
  }
  return t;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

inline double parse_double(std::string_view s, const std::string& what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw InputError(what + ": not a number '" + std::string(s) + "'");
  }
  return v;
}

// Accumulates an RFC-4180 document with LF line endings.
class CsvWriter {
 public:
  void comment(std::string_view text) {
    out_ += "# ";
    out_ += text;
    out_ += '\n';
  }
  void row(std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ += ',';
      write_field(fields[i]);
    }
    out_ += '\n';
  }
  void row(std::initializer_list<std::string> fields) { row(std::span<const std::string>(fields.begin(), fields.size())); }
  const std::string& str() const { return out_; }

 private:
  void write_field(const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out_ += f;
      return;
    }
    out_ += '"';
    for (char c : f) {
      if (c == '"') out_ += '"';
      out_ += c;
    }
    out_ += '"';
  }
  std::string out_;
};

}  // namespace epirecon::util
