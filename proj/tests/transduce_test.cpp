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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles/fst_oracle.hpp"
#include "oracles/pushforward_oracle.hpp"
#include "oracles/random_lm.hpp"
#include "oracles/random_machines.hpp"
#include "unitsurp/error.hpp"
#include "unitsurp/fst/operations.hpp"
#include "unitsurp/logspace.hpp"
#include "unitsurp/transduce/scorer.hpp"
#include "unitsurp/units/delimiter.hpp"

namespace unitsurp {
namespace {

using oracle::letters;

LmPtr two_string_lm() {
  return std::make_shared<FiniteSupportModel>(
      letters(2), std::vector<std::pair<SymbolString, double>>{{{0}, 0.5}, {{0, 1}, 0.5}});
}

// sigma -> sigma SEP: the whole string is one unit, completion code.
Transducer completion_machine() {
  auto in = letters(2);
  auto out = letters(2, true);
  TransducerBuilder b(in, out);
  b.add_state();
  b.add_initial(0);
  b.add_arc(0, 0, Symbol{0}, 0);
  b.add_arc(0, 1, Symbol{1}, 0);
  b.set_final(0, {2});
  return std::move(b).build();
}

// sigma -> SEP sigma: onset code.
Transducer onset_machine() {
  auto in = letters(2);
  auto out = letters(2, true);
  TransducerBuilder b(in, out);
  b.ensure_states(2);
  b.add_initial(0);
  b.add_arc(0, 0, SymbolString{2, 0}, 1);
  b.add_arc(0, 1, SymbolString{2, 1}, 1);
  b.add_arc(1, 0, Symbol{0}, 1);
  b.add_arc(1, 1, Symbol{1}, 1);
  b.set_final(0);
  b.set_final(1);
  return std::move(b).build();
}

TEST(Pushforward, TwoStringCompletion) {
  auto r = pushforward_exact(*two_string_lm(), completion_machine(), 4);
  EXPECT_NEAR(r.prob.at({0, 2}), 0.5, 1e-12);
  EXPECT_NEAR(r.prob.at({0, 1, 2}), 0.5, 1e-12);
  EXPECT_EQ(r.prob.size(), 2u);
  EXPECT_NEAR(r.truncated_mass, 0.0, 1e-15);
}

TEST(Pushforward, IdentityKeepsTheDistribution) {
  oracle::RandomNGramLm lm(letters(3), 2, 3);
  auto r = pushforward_exact(lm, identity(letters(3)), 5);
  double total = r.truncated_mass;
  for (const auto& [d, p] : r.prob) {
    EXPECT_NEAR(p, std::exp(seq_prob(lm, d)), 1e-14);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Pushforward, MatchesBruteForce) {
  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    auto base = std::make_shared<oracle::RandomNGramLm>(letters(3), 2, rng.next());
    BoundedLengthModel lm(base, 5);
    auto f = oracle::random_transducer(rng, letters(3), letters(2, true), 4, 0.15, 2);
    auto got = pushforward_exact(lm, f, 5);
    auto want = oracle::pushforward(lm, f, 5);
    ASSERT_EQ(got.prob.size(), want.size());
    for (const auto& [d, p] : want) ASSERT_NEAR(got.prob.at(d), p, 1e-12);
  }
}

TEST(Pushforward, EnumerationGuard) {
  oracle::RandomNGramLm lm(make_alphabet(Alphabet::bytes(false)), 1, 1);
  try {
    pushforward_exact(lm, identity(make_alphabet(Alphabet::bytes(false))), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEnumerationTooLarge);
  }
}

TEST(Scorer, TwoStringCompletionAndOnset) {
  PrefixScorer c(two_string_lm(), completion_machine(), BeamConfig::no_pruning());
  EXPECT_NEAR(std::exp(c.prefix_mass({0, 2})), 0.5, 1e-12);
  EXPECT_EQ(c.prefix_mass({}), 0.0);
  auto p0 = c.decompose_next({});
  EXPECT_NEAR(std::exp(p0[0]), 1.0, 1e-12);
  auto p1 = c.decompose_next({0});
  EXPECT_NEAR(std::exp(p1[2]), 0.5, 1e-12);
  EXPECT_NEAR(std::exp(p1[1]), 0.5, 1e-12);
  PrefixScorer o(two_string_lm(), onset_machine(), BeamConfig::no_pruning());
  EXPECT_NEAR(std::exp(o.prefix_mass({2, 0})), 1.0, 1e-12);
}

TEST(Scorer, PointMass) {
  auto lm = std::make_shared<FiniteSupportModel>(
      letters(2), std::vector<std::pair<SymbolString, double>>{{{1, 0}, 1.0}});
  PrefixScorer s(lm, completion_machine(), BeamConfig{});
  const auto p = s.decompose_next({1});
  EXPECT_NEAR(std::exp(p[0]), 1.0, 1e-12);
  for (std::size_t x = 1; x < p.size(); ++x) EXPECT_EQ(p[x], kNegInf);
}

struct Instance {
  std::shared_ptr<BoundedLengthModel> lm;
  Transducer f;
  std::map<SymbolString, double> exact;
};

void expect_log_near(double a, double b, double tol) {
  if (a == kNegInf || b == kNegInf) {
    EXPECT_EQ(a, b);
  } else {
    EXPECT_NEAR(a, b, tol);
  }
}

Instance random_instance(Rng& rng) {
  const int sigma = 2 + static_cast<int>(rng.below(3));
  const int order = 1 + static_cast<int>(rng.below(2));
  auto base = std::make_shared<oracle::RandomNGramLm>(letters(sigma), order, rng.next(), 1.5, 0.1);
  auto lm = std::make_shared<BoundedLengthModel>(base, 6);
  auto f = oracle::random_sequential(rng, letters(sigma), letters(2, true), 6, 0.85, 2);
  auto exact = oracle::pushforward(*lm, f, 6);
  return {lm, std::move(f), std::move(exact)};
}

// Output prefixes with positive exact mass, up to the given length.
std::vector<SymbolString> supported_prefixes(const std::map<SymbolString, double>& exact,
                                             std::size_t max_len) {
  std::set<SymbolString> out;
  for (const auto& [d, p] : exact) {
    for (std::size_t k = 0; k <= std::min(max_len, d.size()); ++k) {
      out.insert(SymbolString(d.begin(), d.begin() + k));
    }
  }
  return {out.begin(), out.end()};
}

TEST(Scorer, NoPruningMatchesEnumeration) {
  Rng rng(4242);
  for (int i = 0; i < 40; ++i) {
    auto inst = random_instance(rng);
    PrefixScorer s(inst.lm, inst.f, BeamConfig::no_pruning());
    for (const auto& delta : supported_prefixes(inst.exact, 4)) {
      const double z = oracle::prefix_mass(inst.exact, delta);
      ASSERT_NEAR(std::exp(s.prefix_mass(delta)), z, 1e-9);
      const auto cond = s.decompose_next(delta);
      double total = 0.0;
      for (Symbol x = 0; x < 3; ++x) {
        SymbolString ext = delta;
        ext.push_back(x);
        ASSERT_NEAR(std::exp(cond[x]), oracle::prefix_mass(inst.exact, ext) / z, 1e-9);
        total += std::exp(cond[x]);
      }
      auto it = inst.exact.find(delta);
      ASSERT_NEAR(std::exp(cond[3]), it == inst.exact.end() ? 0.0 : it->second / z, 1e-9);
      total += std::exp(cond[3]);
      ASSERT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Scorer, ScoreSymbolAgreesWithDecomposition) {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    auto inst = random_instance(rng);
    PrefixScorer s(inst.lm, inst.f, BeamConfig::no_pruning());
    for (const auto& delta : supported_prefixes(inst.exact, 3)) {
      const auto cond = s.decompose_next(delta);
      const double z = s.prefix_mass(delta);
      for (Symbol x = 0; x <= s.eos(); ++x) {
        const double direct = s.score_symbol(delta, x);
        if (cond[x] == kNegInf) {
          ASSERT_EQ(direct, kNegInf);
        } else {
          ASSERT_NEAR(direct, cond[x] + z, 1e-9);
        }
      }
      // EOS after the whole string is the full-string probability.
      auto it = inst.exact.find(delta);
      if (it != inst.exact.end()) {
        ASSERT_NEAR(s.score_symbol(delta, s.eos()), std::log(it->second), 1e-9);
      }
    }
  }
}

TEST(Scorer, PruningOnlyLosesMass) {
  Rng rng(5);
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    auto inst = random_instance(rng);
    BeamConfig tight;
    tight.beam_k = 2;
    tight.fst_prune = 0.05;
    tight.max_expand_steps = 2;
    PrefixScorer s(inst.lm, inst.f, tight);
    for (const auto& delta : supported_prefixes(inst.exact, 4)) {
      try {
        const double got = s.prefix_mass(delta);
        EXPECT_LE(std::exp(got), oracle::prefix_mass(inst.exact, delta) + 1e-12);
        ++checked;
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kBeamExhausted);
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Scorer, RareObservedSymbolSurvivesPruning) {
  auto lm = std::make_shared<FiniteSupportModel>(
      letters(3), std::vector<std::pair<SymbolString, double>>{{{0}, 0.998}, {{2}, 0.002}});
  PrefixScorer s(lm, identity(letters(3)), BeamConfig{});
  EXPECT_NEAR(std::exp(s.prefix_mass({2})), 0.002, 1e-12);
}

TEST(Scorer, TrailingSepIsOneHypothesis) {
  // Ten continuations after the delimiter; K = 5 must still reach the rarest.
  auto bytes = make_alphabet(Alphabet::bytes(false));
  auto out = make_alphabet(Alphabet::bytes(true));
  std::vector<std::pair<SymbolString, double>> table;
  const std::string next = "bcdefghij";
  for (char c : next) table.push_back({bytes->encode_bytes(std::string("a ") + c), 0.111});
  table.push_back({bytes->encode_bytes("a z"), 1.0 - 0.111 * 9});
  auto lm = std::make_shared<FiniteSupportModel>(bytes, table);
  PrefixScorer s(lm, delimiter_fst(bytes, out, {' '}, Attribution::kTrailing), BeamConfig{});
  SymbolString delta = out->encode_bytes("a ");
  delta.push_back(*out->sep());
  EXPECT_NEAR(std::exp(s.prefix_mass(delta)), 1.0, 1e-12);
  delta.push_back('z');
  EXPECT_NEAR(std::exp(s.prefix_mass(delta)), 1.0 - 0.111 * 9, 1e-12);
}

TEST(Scorer, CacheCoherence) {
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    auto inst = random_instance(rng);
    auto machine = std::make_shared<const ScoringMachine>(inst.f);
    PrefixScorer incremental(inst.lm, machine, BeamConfig{});
    const auto prefixes = supported_prefixes(inst.exact, 4);
    std::map<SymbolString, double> seen;
    for (const auto& d : prefixes) {
      try {
        seen[d] = incremental.prefix_mass(d);
      } catch (const Error&) {
      }
    }
    for (auto it = seen.rbegin(); it != seen.rend(); ++it) {
      PrefixScorer fresh(inst.lm, machine, BeamConfig{});
      expect_log_near(fresh.prefix_mass(it->first), it->second, 1e-12);
    }
  }
}

TEST(Scorer, FastPathChangesNothing) {
  auto in = letters(3);
  auto out = letters(3, true);
  for (const char* attr : {"leading", "trailing", "absorb"}) {
    auto f = delimiter_fst(in, out, {2}, parse_attribution(attr));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto base = std::make_shared<oracle::RandomNGramLm>(in, 2, seed);
      auto lm = std::make_shared<BoundedLengthModel>(base, 6);
      BeamConfig on = BeamConfig::no_pruning(), off = on;
      off.universal_fast_path = false;
      PrefixScorer a(lm, f, on), b(lm, f, off);
      const auto exact = oracle::pushforward(*lm, f, 6);
      for (const auto& d : supported_prefixes(exact, 5)) {
        // Without the fast path the acceptance sum is computed, not assumed.
        ASSERT_NEAR(a.prefix_mass(d), b.prefix_mass(d), 1e-12) << attr;
      }
    }
  }
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    auto inst = random_instance(rng);
    BeamConfig on = BeamConfig::no_pruning(), off = on;
    off.universal_fast_path = false;
    PrefixScorer a(inst.lm, inst.f, on), b(inst.lm, inst.f, off);
    for (const auto& d : supported_prefixes(inst.exact, 4)) {
      expect_log_near(a.prefix_mass(d), b.prefix_mass(d), 1e-12);
    }
  }
}

TEST(Scorer, BeamExhausted) {
  auto in = letters(3);
  auto lm = std::make_shared<oracle::RandomNGramLm>(in, 1, 3);
  // Two symbols in per symbol out, but only one read allowed between outputs.
  const auto pairs = build(2, {{0, 0, {}, 1}, {1, 0, {0}, 0}}, {0}, {0}, in, in);
  BeamConfig harsh;
  harsh.max_expand_steps = 1;
  PrefixScorer t(lm, pairs, harsh);
  try {
    t.prefix_mass({0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBeamExhausted);
  }
}

TEST(BeamConfigTest, DefaultsAndJson) {
  BeamConfig c;
  EXPECT_EQ(c.beam_k, 5u);
  EXPECT_EQ(c.beam_prune, 0.001);
  EXPECT_EQ(c.fst_prune, 0.005);
  EXPECT_EQ(c.max_expand_steps, 5u);
  EXPECT_EQ(c.expand_stop_mass, 0.01);
  auto back = BeamConfig::from_json(R"({"beam_k": 9, "fst_prune": 0.1})");
  EXPECT_EQ(back.beam_k, 9u);
  EXPECT_EQ(back.fst_prune, 0.1);
  EXPECT_EQ(back.beam_prune, 0.001);
  EXPECT_EQ(BeamConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(BeamConfig::from_json(R"({"beam_k": 0})"), Error);
  EXPECT_THROW(BeamConfig::from_json(R"({"beam_prune": 1.0})"), Error);
}

TEST(Scorer, AlphabetMismatch) {
  try {
    PrefixScorer s(two_string_lm(), identity(letters(3)), BeamConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlphabetMismatch);
  }
}

}  // namespace
}  // namespace unitsurp
