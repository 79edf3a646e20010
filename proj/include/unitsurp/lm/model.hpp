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

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "unitsurp/fst/transducer.hpp"
#include "unitsurp/rng.hpp"

namespace unitsurp {

// Conditioning state of a model. Contexts with equal states have equal next
// distributions, which is what lets the prefix scorer merge hypotheses.
using LmState = std::vector<std::int32_t>;

// Autoregressive model over alphabet() plus EOS. EOS never appears in a
// context; in distributions it sits at index alphabet().size().
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Alphabet& alphabet() const = 0;
  virtual LmState initial_state() const = 0;
  virtual LmState advance(const LmState& state, Symbol x) const = 0;
  // Log probabilities, size alphabet().size() + 1. Must be safe to call
  // concurrently.
  virtual std::vector<double> log_next(const LmState& state) const = 0;

  std::size_t eos_index() const { return alphabet().size(); }

  // Throws UnknownSymbol.
  LmState state_of(std::span<const Symbol> context) const;
  std::vector<double> next_dist(std::span<const Symbol> context) const;
};

using LmPtr = std::shared_ptr<const LanguageModel>;

// All three in log space; UnknownSymbol on out-of-alphabet input.
double seq_prob(const LanguageModel& lm, std::span<const Symbol> sigma);
double prefix_prob(const LanguageModel& lm, std::span<const Symbol> sigma);
// log p(context . suffix) - log p(context). ZeroPrefixMass if the context
// has no mass.
double cond_prefix_prob(const LanguageModel& lm, std::span<const Symbol> suffix,
                        std::span<const Symbol> context);

// Ancestral sample, cut at max_len symbols.
SymbolString sample(const LanguageModel& lm, std::size_t max_len, Rng& rng);
SymbolString sample(const LanguageModel& lm, std::size_t max_len, std::uint64_t seed);

// Distribution given by an explicit table of strings. The state is the whole
// prefix. Contexts without mass get a uniform next distribution.
class FiniteSupportModel : public LanguageModel {
 public:
  // Probabilities must be nonnegative and sum to 1.
  FiniteSupportModel(AlphabetPtr alphabet,
                     const std::vector<std::pair<SymbolString, double>>& table);

  const Alphabet& alphabet() const override { return *alphabet_; }
  LmState initial_state() const override { return {}; }
  LmState advance(const LmState& state, Symbol x) const override;
  std::vector<double> log_next(const LmState& state) const override;

 private:
  double mass(const LmState& prefix) const;

  AlphabetPtr alphabet_;
  std::map<SymbolString, double> prefix_mass_;
  std::map<SymbolString, double> exact_mass_;
};

// Wraps a model and forces EOS once max_len symbols have been read, so every
// string has bounded length and exact enumeration is finite.
class BoundedLengthModel : public LanguageModel {
 public:
  BoundedLengthModel(LmPtr base, std::size_t max_len) : base_(std::move(base)), max_len_(max_len) {}

  const Alphabet& alphabet() const override { return base_->alphabet(); }
  LmState initial_state() const override;
  LmState advance(const LmState& state, Symbol x) const override;
  std::vector<double> log_next(const LmState& state) const override;

  std::size_t max_len() const { return max_len_; }

 private:
  LmPtr base_;
  std::size_t max_len_;
};

}  // namespace unitsurp
