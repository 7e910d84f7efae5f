#pragma once

// Minimal comma-separated text helpers shared by the file formats. Fields never
// contain commas or quotes in any format this project reads or writes.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nlaid/errors.hpp"

namespace nlaid {

/// Shortest-safe text for a double: 17 significant digits, exact on reread.
std::string format_real(double value);
double parse_real(std::string_view text);
std::int64_t parse_int(std::string_view text);
bool parse_bool(std::string_view text);

std::vector<std::string> split_fields(std::string_view line);

/// Reads a header-checked CSV file row by row, tracking line numbers for errors.
class CsvReader {
 public:
  CsvReader(const std::string& path, const std::vector<std::string>& expected_header);

  /// False at end of file. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }
  /// "path:line: message"
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::string path_;
  std::size_t columns_;
  std::size_t line_ = 0;
  std::unique_ptr<std::istream> in_;
};

std::string join_fields(const std::vector<std::string>& fields);

using TimePoint = std::chrono::sys_seconds;

/// "YYYY-MM-DDTHH:MM:SS" (UTC, no zone suffix; a trailing 'Z' is accepted on input).
std::string format_timestamp(TimePoint t);
TimePoint parse_timestamp(std::string_view text);

}  // namespace nlaid
