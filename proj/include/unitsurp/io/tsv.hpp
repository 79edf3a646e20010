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

#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace unitsurp {

// Backslash escapes for tab, newline, carriage return and backslash.
std::string tsv_escape(std::string_view s);
std::string tsv_unescape(std::string_view s);

std::vector<std::string> split_tabs(std::string_view line);

// Fixed-format number; "NA" for missing values.
std::string format_number(double x);
std::string format_number(const std::optional<double>& x);
// Throws ParseError on malformed input.
double parse_number(std::string_view s, std::string_view what);
std::optional<double> parse_optional_number(std::string_view s, std::string_view what);

// Reads non-comment, non-empty lines. The first one is the header and must
// equal `columns`; rows must have as many fields.
class TsvReader {
 public:
  TsvReader(std::istream& in, std::vector<std::string> columns, std::string what);
  // False at end of input.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::vector<std::string> columns_;
  std::string what_;
  std::size_t line_ = 0;
  bool header_seen_ = false;
};

void write_header_comments(std::ostream& out, const std::vector<std::string>& lines);

// Number of UTF-8 characters. A byte that is not part of a complete
// sequence counts as one character, as in the character inventory.
std::size_t utf8_length(std::string_view s);
// Character index of every byte, same counting as utf8_length, plus one
// trailing entry holding the total.
std::vector<std::size_t> utf8_char_index(std::string_view s);

}  // namespace unitsurp
