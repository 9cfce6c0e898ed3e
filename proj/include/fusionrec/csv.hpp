#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fusionrec/common.hpp"

namespace fusionrec::csv {

/// One parsed record and the 1-based line it started on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// Reads RFC 4180 style records: comma separated, double-quoted fields may contain
/// commas, doubled quotes and newlines. CRLF line endings are accepted.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::optional<Record> next() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    Record rec;
    rec.line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;;) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
          if (c == '"') {
            if (i + 1 < line.size() && line[i + 1] == '"') {
              field.push_back('"');
              ++i;
            } else {
              quoted = false;
            }
          } else {
            field.push_back(c);
          }
        } else if (c == '"') {
          if (!field.empty())
            fail_data(source_ + ":" + std::to_string(rec.line) + ": stray quote inside unquoted field");
          quoted = true;
          was_quoted = true;
        } else if (c == ',') {
          rec.fields.push_back(std::move(field));
          field.clear();
          was_quoted = false;
        } else {
          if (was_quoted)
            fail_data(source_ + ":" + std::to_string(rec.line) + ": text after closing quote");
          field.push_back(c);
        }
      }
      if (!quoted) break;
      if (!std::getline(in_, line))
        fail_data(source_ + ":" + std::to_string(rec.line) + ": unterminated quoted field");
      ++line_;
      field.push_back('\n');
    }
    rec.fields.push_back(std::move(field));
    return rec;
  }

  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

inline std::string quote(std::string_view s) {
  bool needs = s.find_first_of(",\"\n\r") != std::string_view::npos || s.empty();
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

inline std::int64_t parse_int(std::string_view s, const std::string& ctx) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    fail_data(ctx + ": expected integer, got '" + std::string(s) + "'");
  return v;
}

inline double parse_double(std::string_view s, const std::string& ctx) {
  // strtod rather than from_chars<double>: it also accepts "nan"/"inf" spelled any way,
  // which we want to reject with a precise message rather than a parse error.
  std::string tmp(s);
  if (tmp.empty()) fail_data(ctx + ": expected number, got empty field");
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) fail_data(ctx + ": expected number, got '" + tmp + "'");
  return v;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace fusionrec::csv
