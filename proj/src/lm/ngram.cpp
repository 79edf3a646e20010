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

#include "unitsurp/lm/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "unitsurp/error.hpp"

namespace unitsurp {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string to_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned char c : bytes) {
    s += digits[c >> 4];
    s += digits[c & 15];
  }
  return s;
}

std::string from_hex(const std::string& hex) {
  if (hex.size() % 2) fail(ErrorCode::kParseError, "odd-length hex spelling");
  std::string s;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    s += static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16));
  }
  return s;
}

}  // namespace

SmoothingKind parse_smoothing(std::string_view name) {
  if (name == "add-lambda" || name == "add") return SmoothingKind::kAddLambda;
  if (name == "kneser-ney" || name == "kn") return SmoothingKind::kKneserNey;
  fail(ErrorCode::kInvalidArgument, "unknown smoothing '" + std::string(name) + "'");
}

std::string_view smoothing_name(SmoothingKind kind) {
  return kind == SmoothingKind::kAddLambda ? "add-lambda" : "kneser-ney";
}

std::size_t VectorHash::operator()(const std::vector<std::int32_t>& v) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ v.size();
  for (auto x : v) h = splitmix64(h ^ static_cast<std::uint32_t>(x));
  return static_cast<std::size_t>(h);
}

NGramModel::NGramModel(AlphabetPtr alphabet, int order, Smoothing smoothing,
                       std::unordered_map<std::vector<Symbol>, double, VectorHash> grams)
    : alphabet_(std::move(alphabet)), order_(order), smoothing_(std::move(smoothing)),
      grams_(std::move(grams)) {
  if (order_ < 1) fail(ErrorCode::kInvalidArgument, "n-gram order must be at least 1");
  if (smoothing_.kind == SmoothingKind::kAddLambda && !(smoothing_.lambda > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "add-lambda needs lambda > 0");
  }
  build_tables();
}

NGramModel NGramModel::train(const std::vector<SymbolString>& corpus, AlphabetPtr alphabet,
                             int order, Smoothing smoothing) {
  if (corpus.empty()) fail(ErrorCode::kEmptyCorpus, "training corpus has no sequences");
  if (order < 1) fail(ErrorCode::kInvalidArgument, "n-gram order must be at least 1");
  const Symbol v = static_cast<Symbol>(alphabet->size());
  std::unordered_map<std::vector<Symbol>, double, VectorHash> grams;
  for (const auto& seq : corpus) {
    std::vector<Symbol> padded(order - 1, v);
    for (Symbol x : seq) {
      if (!alphabet->contains(x)) fail(ErrorCode::kUnknownSymbol, "corpus symbol out of range");
      padded.push_back(x);
    }
    padded.push_back(v);  // EOS as the final outcome
    for (std::size_t i = order - 1; i < padded.size(); ++i) {
      grams[std::vector<Symbol>(padded.begin() + (i - (order - 1)), padded.begin() + i + 1)] += 1.0;
    }
  }
  return NGramModel(std::move(alphabet), order, std::move(smoothing), std::move(grams));
}

void NGramModel::build_tables() {
  tables_.assign(order_, Table{});
  const bool kn = smoothing_.kind == SmoothingKind::kKneserNey;
  // Level k holds histories of length k. The top level uses raw counts; with
  // Kneser-Ney the lower levels use continuation counts over the distinct
  // suffixes of the observed n-grams.
  std::vector<std::map<std::vector<Symbol>, double>> level_counts(order_);
  for (const auto& [g, c] : grams_) level_counts[order_ - 1][g] += c;
  if (kn) {
    std::vector<std::set<std::vector<Symbol>>> types(order_);
    for (const auto& [g, c] : grams_) {
      for (int len = 2; len <= order_; ++len) {
        types[len - 1].insert(std::vector<Symbol>(g.end() - len, g.end()));
      }
    }
    for (int len = 2; len <= order_; ++len) {
      for (const auto& t : types[len - 1]) {
        level_counts[len - 2][std::vector<Symbol>(t.begin() + 1, t.end())] += 1.0;
      }
    }
  }
  for (int k = 0; k < order_; ++k) {
    Table& t = tables_[k];
    for (const auto& [g, c] : level_counts[k]) {
      Entry& e = t[std::vector<Symbol>(g.begin(), g.end() - 1)];
      e.total += c;
      e.types += 1.0;
      e.counts.emplace_back(g.back(), c);
    }
  }
  if (kn && smoothing_.discounts.empty()) {
    for (int k = 0; k < order_; ++k) {
      double n1 = 0, n2 = 0;
      for (const auto& [g, c] : level_counts[k]) {
        if (c == 1.0) n1 += 1;
        if (c == 2.0) n2 += 1;
      }
      double d = (n1 > 0 && n1 + 2 * n2 > 0) ? n1 / (n1 + 2 * n2) : 0.5;
      smoothing_.discounts.push_back(std::clamp(d, 0.05, 0.95));
    }
  }
  if (kn && static_cast<int>(smoothing_.discounts.size()) != order_) {
    fail(ErrorCode::kInvalidArgument, "need one discount per order");
  }
  for (double d : smoothing_.discounts) {
    if (!(d > 0.0 && d < 1.0)) fail(ErrorCode::kInvalidArgument, "discounts must lie in (0, 1)");
  }
}

LmState NGramModel::initial_state() const {
  return LmState(order_ - 1, static_cast<Symbol>(alphabet_->size()));
}

LmState NGramModel::advance(const LmState& state, Symbol x) const {
  if (order_ == 1) return state;
  LmState s(state.begin() + 1, state.end());
  s.push_back(x);
  return s;
}

std::vector<double> NGramModel::log_next(const LmState& state) const {
  const std::size_t n = alphabet_->size() + 1;
  std::vector<double> p(n);
  if (smoothing_.kind == SmoothingKind::kAddLambda) {
    const double lam = smoothing_.lambda;
    auto it = tables_[order_ - 1].find(state);
    const double total = it == tables_[order_ - 1].end() ? 0.0 : it->second.total;
    const double z = total + lam * static_cast<double>(n);
    std::fill(p.begin(), p.end(), lam / z);
    if (it != tables_[order_ - 1].end()) {
      for (const auto& [x, c] : it->second.counts) p[x] += c / z;
    }
  } else {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
    for (int k = 0; k < order_; ++k) {
      const LmState h(state.end() - k, state.end());
      auto it = tables_[k].find(h);
      if (it == tables_[k].end() || it->second.total <= 0.0) continue;
      const Entry& e = it->second;
      const double d = smoothing_.discounts[k];
      const double backoff = d * e.types / e.total;
      for (double& v : p) v *= backoff;
      for (const auto& [x, c] : e.counts) p[x] += std::max(c - d, 0.0) / e.total;
    }
  }
  for (double& v : p) v = std::log(v);
  return p;
}

std::string NGramModel::to_json() const {
  json j;
  j["format"] = "unitsurp-ngram";
  j["version"] = kFormatVersion;
  j["order"] = order_;
  j["smoothing"] = {{"kind", smoothing_name(smoothing_.kind)},
                    {"lambda", smoothing_.lambda},
                    {"discounts", smoothing_.discounts}};
  json symbols = json::array();
  for (Symbol x = 0; x < static_cast<Symbol>(alphabet_->size()); ++x) {
    symbols.push_back({{"label", alphabet_->label(x)}, {"spelling_hex", to_hex(alphabet_->spelling(x))}});
  }
  j["alphabet"] = symbols;
  // Sorted so equal models serialize to equal bytes.
  std::vector<std::pair<std::vector<Symbol>, double>> sorted(grams_.begin(), grams_.end());
  std::sort(sorted.begin(), sorted.end());
  json counts = json::array();
  for (const auto& [g, c] : sorted) {
    json row = g;
    row.push_back(c);
    counts.push_back(row);
  }
  j["counts"] = counts;
  return j.dump();
}

NGramModel NGramModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("model file: ") + e.what());
  }
  try {
    if (j.at("format") != "unitsurp-ngram") fail(ErrorCode::kParseError, "not an n-gram model file");
    if (j.at("version").get<int>() != kFormatVersion) {
      fail(ErrorCode::kParseError, "unsupported model version " + j.at("version").dump());
    }
    Alphabet a;
    for (const auto& s : j.at("alphabet")) {
      a.add(s.at("label").get<std::string>(), from_hex(s.at("spelling_hex").get<std::string>()));
    }
    Smoothing sm;
    sm.kind = parse_smoothing(j.at("smoothing").at("kind").get<std::string>());
    sm.lambda = j.at("smoothing").at("lambda").get<double>();
    sm.discounts = j.at("smoothing").at("discounts").get<std::vector<double>>();
    const int order = j.at("order").get<int>();
    std::unordered_map<std::vector<Symbol>, double, VectorHash> grams;
    const auto v = static_cast<Symbol>(a.size());
    for (const auto& row : j.at("counts")) {
      if (row.size() != static_cast<std::size_t>(order) + 1) fail(ErrorCode::kParseError, "bad count row");
      std::vector<Symbol> g;
      for (std::size_t i = 0; i + 1 < row.size(); ++i) {
        const Symbol x = row[i].get<Symbol>();
        if (x < 0 || x > v) fail(ErrorCode::kParseError, "count row symbol out of range");
        g.push_back(x);
      }
      grams[g] += row.back().get<double>();
    }
    return NGramModel(make_alphabet(std::move(a)), order, std::move(sm), std::move(grams));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("model file: ") + e.what());
  }
}

void NGramModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  out << to_json() << '\n';
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path);
}

NGramModel NGramModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace unitsurp
