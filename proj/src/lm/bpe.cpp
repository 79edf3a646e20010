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

#include "unitsurp/lm/bpe.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "unitsurp/error.hpp"

namespace unitsurp {

using nlohmann::json;

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t start = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (is_space(text[i]) && !is_space(text[i - 1])) {
      chunks.push_back(text.substr(start, i - start));
      start = i;
    }
  }
  if (start < text.size()) chunks.push_back(text.substr(start));
  return chunks;
}

BpeTokenizer::BpeTokenizer() : table_(Alphabet::bytes(false)) {
  alphabet_ = make_alphabet(table_);
}

void BpeTokenizer::add_merge(Symbol left, Symbol right) {
  const std::string spelling = table_.spelling(left) + table_.spelling(right);
  std::string label;
  for (unsigned char c : spelling) label += Alphabet::byte_label(c);
  auto existing = table_.find(label);
  const Symbol id = existing ? *existing : table_.add(label, spelling);
  rank_[{left, right}] = merges_.size();
  merges_.push_back({left, right, id});
}

BpeTokenizer BpeTokenizer::learn(const std::vector<std::string>& lines, std::size_t num_merges) {
  BpeTokenizer t;
  std::map<std::string, double> freq;
  for (const auto& line : lines) {
    for (auto c : pretokenize(line)) freq[std::string(c)] += 1.0;
  }
  std::vector<std::pair<SymbolString, double>> words;
  for (const auto& [w, f] : freq) {
    SymbolString s;
    for (unsigned char c : w) s.push_back(c);
    words.emplace_back(std::move(s), f);
  }
  while (t.merges_.size() < num_merges) {
    std::map<std::pair<Symbol, Symbol>, double> pairs;
    for (const auto& [w, f] : words) {
      for (std::size_t i = 0; i + 1 < w.size(); ++i) pairs[{w[i], w[i + 1]}] += f;
    }
    // Most frequent pair, smallest ids on ties (map order).
    std::pair<Symbol, Symbol> best{};
    double best_count = 0.0;
    for (const auto& [p, c] : pairs) {
      if (c > best_count && !t.rank_.count(p)) {
        best = p;
        best_count = c;
      }
    }
    if (best_count < 2.0) break;
    t.add_merge(best.first, best.second);
    const Symbol id = t.merges_.back().result;
    for (auto& [w, f] : words) {
      SymbolString merged;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (i + 1 < w.size() && w[i] == best.first && w[i + 1] == best.second) {
          merged.push_back(id);
          ++i;
        } else {
          merged.push_back(w[i]);
        }
      }
      w = std::move(merged);
    }
  }
  t.alphabet_ = make_alphabet(t.table_);
  return t;
}

void BpeTokenizer::encode_chunk(std::string_view chunk, SymbolString& out) const {
  SymbolString s;
  for (unsigned char c : chunk) s.push_back(c);
  while (s.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      auto it = rank_.find({s[i], s[i + 1]});
      if (it != rank_.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == merges_.size()) break;
    const Merge& m = merges_[best_rank];
    SymbolString merged;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i + 1 < s.size() && s[i] == m.left && s[i + 1] == m.right) {
        merged.push_back(m.result);
        ++i;
      } else {
        merged.push_back(s[i]);
      }
    }
    s = std::move(merged);
  }
  out.insert(out.end(), s.begin(), s.end());
}

SymbolString BpeTokenizer::encode(std::string_view text) const {
  SymbolString out;
  for (auto c : pretokenize(text)) encode_chunk(c, out);
  return out;
}

std::string BpeTokenizer::to_json() const {
  json merges = json::array();
  for (const auto& m : merges_) merges.push_back({m.left, m.right});
  return json{{"format", "unitsurp-bpe"}, {"version", 1}, {"merges", merges}}.dump();
}

BpeTokenizer BpeTokenizer::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "unitsurp-bpe" || j.at("version") != 1) {
      fail(ErrorCode::kParseError, "not a version-1 BPE file");
    }
    BpeTokenizer t;
    for (const auto& m : j.at("merges")) {
      const Symbol l = m.at(0).get<Symbol>(), r = m.at(1).get<Symbol>();
      if (!t.table_.contains(l) || !t.table_.contains(r)) {
        fail(ErrorCode::kParseError, "merge refers to an unknown token");
      }
      t.add_merge(l, r);
    }
    t.alphabet_ = make_alphabet(t.table_);
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("BPE file: ") + e.what());
  }
}

void BpeTokenizer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  out << to_json() << '\n';
}

BpeTokenizer BpeTokenizer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace unitsurp
