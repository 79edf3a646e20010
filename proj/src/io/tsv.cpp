// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "unitsurp/io/tsv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "unitsurp/error.hpp"

namespace unitsurp {

std::string tsv_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tsv_unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += s[i];
    }
  }
  return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string format_number(const std::optional<double>& x) {
  return x ? format_number(*x) : std::string("NA");
}

double parse_number(std::string_view s, std::string_view what) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kParseError, "bad number '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

std::optional<double> parse_optional_number(std::string_view s, std::string_view what) {
  if (s == "NA" || s.empty()) return std::nullopt;
  return parse_number(s, what);
}

TsvReader::TsvReader(std::istream& in, std::vector<std::string> columns, std::string what)
    : in_(in), columns_(std::move(columns)), what_(std::move(what)) {}

bool TsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fields = split_tabs(line);
    if (!header_seen_) {
      header_seen_ = true;
      if (fields != columns_) {
        fail(ErrorCode::kParseError, what_ + ": unexpected header on line " + std::to_string(line_));
      }
      continue;
    }
    if (fields.size() != columns_.size()) {
      fail(ErrorCode::kParseError, what_ + " line " + std::to_string(line_) + ": expected " +
                                       std::to_string(columns_.size()) + " fields");
    }
    return true;
  }
  if (!header_seen_) fail(ErrorCode::kParseError, what_ + ": missing header");
  return false;
}

void write_header_comments(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << "# " << l << '\n';
}

namespace {

std::size_t utf8_step(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  const std::size_t len = c < 0x80 ? 1 : (c >> 5) == 6 ? 2 : (c >> 4) == 14 ? 3 : (c >> 3) == 30 ? 4 : 1;
  std::size_t k = 1;
  while (k < len && i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80) ++k;
  return k == len ? len : 1;
}

}  // namespace

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) i += utf8_step(s, i);
  return n;
}

std::vector<std::size_t> utf8_char_index(std::string_view s) {
  std::vector<std::size_t> idx(s.size() + 1);
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) {
    const std::size_t k = utf8_step(s, i);
    for (std::size_t j = 0; j < k; ++j) idx[i + j] = n;
    i += k;
  }
  idx[s.size()] = n;
  return idx;
}

}  // namespace unitsurp
