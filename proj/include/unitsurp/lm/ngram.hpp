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

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "unitsurp/lm/model.hpp"

namespace unitsurp {

enum class SmoothingKind { kAddLambda, kKneserNey };

struct Smoothing {
  SmoothingKind kind = SmoothingKind::kKneserNey;
  double lambda = 1.0;
  // Kneser-Ney discount per order (index 0 = unigram). Estimated from
  // count-of-counts when empty.
  std::vector<double> discounts;
};

SmoothingKind parse_smoothing(std::string_view name);
std::string_view smoothing_name(SmoothingKind kind);

struct VectorHash {
  std::size_t operator()(const std::vector<std::int32_t>& v) const;
};

// n-gram model with EOS as an outcome. Contexts are the previous n-1
// symbols, padded on the left with a start marker at id alphabet().size()
// (the EOS index is only ever an outcome, so the two never meet).
class NGramModel : public LanguageModel {
 public:
  // EmptyCorpus when there are no sequences.
  static NGramModel train(const std::vector<SymbolString>& corpus, AlphabetPtr alphabet, int order,
                          Smoothing smoothing);

  const Alphabet& alphabet() const override { return *alphabet_; }
  AlphabetPtr alphabet_ptr() const { return alphabet_; }
  LmState initial_state() const override;
  LmState advance(const LmState& state, Symbol x) const override;
  std::vector<double> log_next(const LmState& state) const override;

  int order() const { return order_; }
  const Smoothing& smoothing() const { return smoothing_; }

  // Versioned JSON count table.
  std::string to_json() const;
  static NGramModel from_json(std::string_view text);
  void save(const std::string& path) const;
  static NGramModel load(const std::string& path);

 private:
  struct Entry {
    double total = 0.0;
    double types = 0.0;
    std::vector<std::pair<Symbol, double>> counts;
  };
  using Table = std::unordered_map<LmState, Entry, VectorHash>;

  NGramModel(AlphabetPtr alphabet, int order, Smoothing smoothing,
             std::unordered_map<std::vector<Symbol>, double, VectorHash> grams);
  void build_tables();

  AlphabetPtr alphabet_;
  int order_ = 1;
  Smoothing smoothing_;
  // Full n-grams (history then outcome) with their counts.
  std::unordered_map<std::vector<Symbol>, double, VectorHash> grams_;
  std::vector<Table> tables_;
};

}  // namespace unitsurp
