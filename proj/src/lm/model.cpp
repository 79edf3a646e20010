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

#include "unitsurp/lm/model.hpp"

#include <cmath>
#include <string>

#include "unitsurp/error.hpp"
#include "unitsurp/logspace.hpp"

namespace unitsurp {
namespace {

void check_symbol(const LanguageModel& lm, Symbol x) {
  if (!lm.alphabet().contains(x)) {
    fail(ErrorCode::kUnknownSymbol, "symbol " + std::to_string(x) + " not in the model alphabet");
  }
}

}  // namespace

LmState LanguageModel::state_of(std::span<const Symbol> context) const {
  LmState s = initial_state();
  for (Symbol x : context) {
    check_symbol(*this, x);
    s = advance(s, x);
  }
  return s;
}

std::vector<double> LanguageModel::next_dist(std::span<const Symbol> context) const {
  auto p = log_next(state_of(context));
  for (double& v : p) v = std::exp(v);
  return p;
}

double prefix_prob(const LanguageModel& lm, std::span<const Symbol> sigma) {
  LmState s = lm.initial_state();
  double lp = 0.0;
  for (Symbol x : sigma) {
    check_symbol(lm, x);
    lp += lm.log_next(s)[x];
    if (lp == kNegInf) return kNegInf;
    s = lm.advance(s, x);
  }
  return lp;
}

double seq_prob(const LanguageModel& lm, std::span<const Symbol> sigma) {
  const double lp = prefix_prob(lm, sigma);
  if (lp == kNegInf) return kNegInf;
  return lp + lm.log_next(lm.state_of(sigma))[lm.eos_index()];
}

double cond_prefix_prob(const LanguageModel& lm, std::span<const Symbol> suffix,
                        std::span<const Symbol> context) {
  const double base = prefix_prob(lm, context);
  if (base == kNegInf) fail(ErrorCode::kZeroPrefixMass, "context has zero prefix probability");
  LmState s = lm.state_of(context);
  double lp = 0.0;
  for (Symbol x : suffix) {
    check_symbol(lm, x);
    lp += lm.log_next(s)[x];
    if (lp == kNegInf) return kNegInf;
    s = lm.advance(s, x);
  }
  return lp;
}

SymbolString sample(const LanguageModel& lm, std::size_t max_len, Rng& rng) {
  SymbolString out;
  LmState s = lm.initial_state();
  while (out.size() < max_len) {
    const auto lp = lm.log_next(s);
    double u = rng.uniform();
    std::size_t pick = lp.size() - 1;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const double p = std::exp(lp[i]);
      if (u < p) {
        pick = i;
        break;
      }
      u -= p;
    }
    // Rounding can leave u just above the total; land on the last symbol with mass.
    if (pick == lp.size() - 1 && lp[pick] == kNegInf) {
      while (pick > 0 && lp[pick] == kNegInf) --pick;
    }
    if (pick == lm.eos_index()) break;
    out.push_back(static_cast<Symbol>(pick));
    s = lm.advance(s, static_cast<Symbol>(pick));
  }
  return out;
}

SymbolString sample(const LanguageModel& lm, std::size_t max_len, std::uint64_t seed) {
  Rng rng(seed);
  return sample(lm, max_len, rng);
}

FiniteSupportModel::FiniteSupportModel(AlphabetPtr alphabet,
                                       const std::vector<std::pair<SymbolString, double>>& table)
    : alphabet_(std::move(alphabet)) {
  double total = 0.0;
  for (const auto& [s, p] : table) {
    if (!(p >= 0.0)) fail(ErrorCode::kInvalidArgument, "negative string probability");
    for (Symbol x : s) check_symbol(*this, x);
    total += p;
    exact_mass_[s] += p;
    for (std::size_t k = 0; k <= s.size(); ++k) {
      prefix_mass_[SymbolString(s.begin(), s.begin() + k)] += p;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "string probabilities sum to " + std::to_string(total));
  }
}

LmState FiniteSupportModel::advance(const LmState& state, Symbol x) const {
  LmState s = state;
  s.push_back(x);
  return s;
}

double FiniteSupportModel::mass(const LmState& prefix) const {
  auto it = prefix_mass_.find(prefix);
  return it == prefix_mass_.end() ? 0.0 : it->second;
}

std::vector<double> FiniteSupportModel::log_next(const LmState& state) const {
  const std::size_t v = alphabet_->size();
  std::vector<double> out(v + 1);
  const double z = mass(state);
  if (z <= 0.0) {
    std::fill(out.begin(), out.end(), -std::log(static_cast<double>(v + 1)));
    return out;
  }
  LmState next = state;
  next.push_back(0);
  for (std::size_t x = 0; x < v; ++x) {
    next.back() = static_cast<Symbol>(x);
    out[x] = std::log(mass(next) / z);
  }
  auto it = exact_mass_.find(state);
  out[v] = std::log((it == exact_mass_.end() ? 0.0 : it->second) / z);
  return out;
}

LmState BoundedLengthModel::initial_state() const {
  LmState s = base_->initial_state();
  s.push_back(0);
  return s;
}

LmState BoundedLengthModel::advance(const LmState& state, Symbol x) const {
  LmState inner(state.begin(), state.end() - 1);
  LmState s = base_->advance(inner, x);
  s.push_back(state.back() + 1);
  return s;
}

std::vector<double> BoundedLengthModel::log_next(const LmState& state) const {
  if (static_cast<std::size_t>(state.back()) >= max_len_) {
    std::vector<double> out(alphabet().size() + 1, kNegInf);
    out.back() = 0.0;
    return out;
  }
  return base_->log_next(LmState(state.begin(), state.end() - 1));
}

}  // namespace unitsurp
