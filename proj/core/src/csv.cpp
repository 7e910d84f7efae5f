#include "nlaid/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace nlaid {

std::string format_real(double value) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    const std::string s(text);
    if (s == "nan" || s == "NaN" || s == "NAN") return std::nan("");
    throw InvalidInput("not a real number: '" + s + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw InvalidInput("not an integer: '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw InvalidInput("not a boolean: '" + std::string(text) + "'");
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    auto field = line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

std::string join_fields(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

CsvReader::CsvReader(const std::string& path, const std::vector<std::string>& expected_header)
    : path_(path), columns_(expected_header.size()), in_(std::make_unique<std::ifstream>(path)) {
  if (!*in_) throw IoError("cannot open " + path);
  std::string raw;
  if (!std::getline(*in_, raw)) fail("missing header");
  ++line_;
  if (split_fields(raw) != expected_header) {
    fail("unexpected header, want '" + join_fields(expected_header) + "'");
  }
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string raw;
  while (std::getline(*in_, raw)) {
    ++line_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    fields = split_fields(raw);
    if (fields.size() != columns_) {
      fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

void CsvReader::fail(const std::string& message) const {
  throw InvalidInput(path_ + ":" + std::to_string(line_) + ": " + message);
}

std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimePoint parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const std::string buf(text);
  const int got = std::sscanf(buf.c_str(), "%4d-%2u-%2u%*1[T ]%2u:%2u:%2u%c", &y, &mo, &d, &h, &mi, &s, &tail);
  if (got != 6 || buf.size() != 19) throw InvalidInput("bad timestamp '" + buf + "'");
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw InvalidInput("bad timestamp '" + buf + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

}  // namespace nlaid
