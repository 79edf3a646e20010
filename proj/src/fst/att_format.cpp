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

#include "unitsurp/fst/att_format.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "unitsurp/error.hpp"

namespace unitsurp {
namespace {

std::string out_field(const Alphabet& a, const SymbolString& s) {
  if (s.empty()) return std::string(kEpsLabel);
  return a.labels_of(s, " ");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + what);
}

StateId parse_state(std::string_view s, std::size_t line) {
  StateId q = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), q);
  if (ec != std::errc() || ptr != s.data() + s.size() || q < 0) {
    parse_error(line, "bad state id '" + std::string(s) + "'");
  }
  return q;
}

Symbol parse_symbol(const Alphabet& a, std::string_view label, std::size_t line) {
  if (label == kEpsLabel) return kEpsilon;
  auto s = a.find(label);
  if (!s) parse_error(line, "unknown symbol '" + std::string(label) + "'");
  return *s;
}

SymbolString parse_output(const Alphabet& a, std::string_view field,
                          std::size_t line) {
  SymbolString out;
  if (field == kEpsLabel) return out;
  for (auto label : split(field, ' ')) {
    if (label.empty()) parse_error(line, "empty output label");
    const Symbol s = parse_symbol(a, label, line);
    if (s == kEpsilon) parse_error(line, "<eps> inside an output string");
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::string serialize(const Transducer& f) {
  std::ostringstream os;
  os << "# states " << f.num_states() << "\n# initials";
  for (StateId q : f.initials()) os << ' ' << q;
  os << '\n';
  const auto& in = f.input_alphabet();
  const auto& out = f.output_alphabet();
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    for (const auto& a : f.arcs(q)) {
      os << q << '\t' << a.dst << '\t'
         << (a.in == kEpsilon ? std::string(kEpsLabel) : in.label(a.in)) << '\t'
         << out_field(out, a.out) << '\n';
    }
  }
  for (StateId q = 0; q < static_cast<StateId>(f.num_states()); ++q) {
    if (!f.is_final(q)) continue;
    os << q;
    if (!f.final_output(q).empty()) os << '\t' << out_field(out, f.final_output(q));
    os << '\n';
  }
  return os.str();
}

Transducer deserialize(std::string_view text, AlphabetPtr in_alpha,
                       AlphabetPtr out_alpha) {
  TransducerBuilder b(in_alpha, out_alpha);
  std::size_t line_no = 0;
  bool have_initials = false;
  StateId first_src = kNoState;
  StateId max_state = -1;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto words = split(line.substr(1), ' ');
      std::vector<std::string_view> w;
      for (auto x : words) {
        if (!x.empty()) w.push_back(x);
      }
      if (!w.empty() && w[0] == "states" && w.size() == 2) {
        const StateId n = parse_state(w[1], line_no);
        b.ensure_states(static_cast<std::size_t>(n));
        max_state = std::max(max_state, n - 1);
      } else if (!w.empty() && w[0] == "initials") {
        have_initials = true;
        for (std::size_t i = 1; i < w.size(); ++i) {
          b.add_initial(parse_state(w[i], line_no));
        }
      }
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() == 4) {
      const StateId src = parse_state(fields[0], line_no);
      const StateId dst = parse_state(fields[1], line_no);
      const Symbol in = parse_symbol(*in_alpha, fields[2], line_no);
      SymbolString out = parse_output(*out_alpha, fields[3], line_no);
      if (first_src == kNoState) first_src = src;
      max_state = std::max({max_state, src, dst});
      b.ensure_states(static_cast<std::size_t>(max_state) + 1);
      b.add_arc(src, in, std::move(out), dst);
    } else if (fields.size() == 1 || fields.size() == 2) {
      const StateId q = parse_state(fields[0], line_no);
      if (first_src == kNoState) first_src = q;
      max_state = std::max(max_state, q);
      b.ensure_states(static_cast<std::size_t>(max_state) + 1);
      b.set_final(q, fields.size() == 2 ? parse_output(*out_alpha, fields[1], line_no)
                                        : SymbolString{});
    } else {
      parse_error(line_no, "expected 1, 2 or 4 tab-separated fields, got " +
                               std::to_string(fields.size()));
    }
  }
  if (!have_initials && first_src != kNoState) b.add_initial(first_src);
  try {
    return std::move(b).build();
  } catch (const Error& e) {
    fail(ErrorCode::kParseError, e.what());
  }
}

}  // namespace unitsurp
