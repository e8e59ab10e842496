#ifndef PVSEVAL_CSV_HPP
#define PVSEVAL_CSV_HPP

// Minimal RFC 4180 CSV: quoted fields, doubled quotes, CRLF tolerated.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pvseval/error.hpp"

namespace pvseval::csv {

inline constexpr std::string_view kMissing = "NA";

struct Table {
  std::string source;  ///< file name used in diagnostics
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  ///< 1-based source line of each row

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }

  std::size_t column(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw Error(Errc::SchemaViolation, source + ": missing column '" + std::string(name) + "'");
  }

  [[noreturn]] void fail(std::size_t row, std::string_view col, const std::string& msg) const {
    throw Error(Errc::SchemaViolation,
                source + ":" + std::to_string(lines[row]) + " column '" + std::string(col) + "': " + msg);
  }

  /// Finite number, or nullopt for an empty / "NA" cell.
  std::optional<double> number(std::size_t row, std::string_view col) const {
    const std::string& s = rows[row][column(col)];
    if (s.empty() || s == kMissing) return std::nullopt;
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
      fail(row, col, "'" + s + "' is not a number");
    return v;
  }

  double required_number(std::size_t row, std::string_view col) const {
    auto v = number(row, col);
    if (!v) fail(row, col, "value is required");
    return *v;
  }

  std::size_t count(std::size_t row, std::string_view col) const {
    const double v = required_number(row, col);
    if (v < 0 || v != std::floor(v)) fail(row, col, "expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  const std::string& text(std::size_t row, std::string_view col) const { return rows[row][column(col)]; }
};

inline Table parse(std::string_view text, std::string source = "<csv>") {
  Table t;
  t.source = std::move(source);
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, field_quoted = false, any = false;
  std::size_t line = 1, record_line = 1;

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&]() {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (t.header.empty() && t.rows.empty() && !any) {
        t.header = std::move(record);
        any = true;
      } else {
        if (record.size() != t.header.size())
          throw Error(Errc::SchemaViolation, t.source + ":" + std::to_string(record_line) + ": expected " +
                                                 std::to_string(t.header.size()) + " fields, found " +
                                                 std::to_string(record.size()));
        t.rows.push_back(std::move(record));
        t.lines.push_back(record_line);
      }
    }
    record.clear();
    record_line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_quoted) {
      in_quotes = field_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      ++line;
      end_record();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) throw Error(Errc::SchemaViolation, t.source + ": unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  if (t.header.empty()) throw Error(Errc::SchemaViolation, t.source + ": empty file, header expected");
  return t;
}

inline Table read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.string());
}

inline std::string escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += escape(fields[i]);
  }
  return line;
}

/// Shortest representation that reads back to the same double.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return std::string(kMissing);
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string(kMissing);
}

class Writer {
 public:
  explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw Error(Errc::SchemaViolation, "csv row width mismatch");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::string out = join(header_) + "\n";
    for (const auto& r : rows_) out += join(r) + "\n";
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoFailure, "cannot create '" + path.string() + "'");
    f << str();
    if (!f) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace pvseval::csv

#endif  // PVSEVAL_CSV_HPP
