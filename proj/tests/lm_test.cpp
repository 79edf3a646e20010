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
#include <functional>
#include <numeric>
#include <set>

#include "oracles/fst_oracle.hpp"
#include "oracles/random_lm.hpp"
#include "oracles/random_machines.hpp"
#include "unitsurp/error.hpp"
#include "unitsurp/logspace.hpp"
#include "unitsurp/lm/bpe.hpp"
#include "unitsurp/lm/model.hpp"
#include "unitsurp/lm/ngram.hpp"

namespace unitsurp {
namespace {

using oracle::letters;

// p(a) = p(ab) = 1/2 over {a, b}.
std::shared_ptr<FiniteSupportModel> two_string_lm() {
  return std::make_shared<FiniteSupportModel>(
      letters(2), std::vector<std::pair<SymbolString, double>>{{{0}, 0.5}, {{0, 1}, 0.5}});
}

double sum_exp(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::exp(x);
  return s;
}

TEST(SeqProb, TwoStringModel) {
  auto lm = two_string_lm();
  EXPECT_NEAR(seq_prob(*lm, SymbolString{0}), std::log(0.5), 1e-12);
  EXPECT_NEAR(seq_prob(*lm, SymbolString{0, 1}), std::log(0.5), 1e-12);
  EXPECT_EQ(seq_prob(*lm, SymbolString{1}), kNegInf);
  EXPECT_NEAR(prefix_prob(*lm, SymbolString{0}), 0.0, 1e-12);
  EXPECT_EQ(prefix_prob(*lm, SymbolString{}), 0.0);
  EXPECT_NEAR(cond_prefix_prob(*lm, SymbolString{1}, SymbolString{0}), std::log(0.5), 1e-12);
  EXPECT_EQ(cond_prefix_prob(*lm, SymbolString{}, SymbolString{0}), 0.0);
}

TEST(SeqProb, DeterministicModel) {
  FiniteSupportModel lm(letters(2), {{{0, 1}, 1.0}});
  EXPECT_EQ(seq_prob(lm, SymbolString{0}), kNegInf);
  EXPECT_EQ(seq_prob(lm, SymbolString{0, 1}), 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(sample(lm, 50, seed), (SymbolString{0, 1}));
  }
}

TEST(SeqProb, Errors) {
  auto lm = two_string_lm();
  try {
    seq_prob(*lm, SymbolString{5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownSymbol);
  }
  try {
    cond_prefix_prob(*lm, SymbolString{0}, SymbolString{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPrefixMass);
  }
}

// Every string up to length 8 plus the mass of the length-9 prefixes.
TEST(SeqProb, SumsToOneWithTruncationMass) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    oracle::RandomNGramLm lm(letters(2), 2, seed);
    double total = 0.0;
    for (const auto& s : oracle::all_strings(2, 8)) total += std::exp(seq_prob(lm, s));
    for (const auto& s : oracle::all_strings(2, 9)) {
      if (s.size() == 9) total += std::exp(prefix_prob(lm, s));
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(PrefixProb, EqualsSumOverExtensions) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto base = std::make_shared<oracle::RandomNGramLm>(letters(3), 2, seed);
    BoundedLengthModel lm(base, 6);
    const auto strings = oracle::all_strings(3, 6);
    for (const auto& prefix : oracle::all_strings(3, 3)) {
      double sum = 0.0;
      for (const auto& s : strings) {
        if (s.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), s.begin())) {
          sum += std::exp(seq_prob(lm, s));
        }
      }
      ASSERT_NEAR(std::exp(prefix_prob(lm, prefix)), sum, 1e-9);
    }
  }
}

TEST(PrefixProb, ChainRuleAndConsistency) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    oracle::RandomNGramLm lm(letters(3), 1 + static_cast<int>(rng.below(3)), rng.next());
    SymbolString ctx, x, y;
    for (int i = 0, n = static_cast<int>(rng.below(4)); i < n; ++i) ctx.push_back(rng.below(3));
    for (int i = 0, n = static_cast<int>(rng.below(3)); i < n; ++i) x.push_back(rng.below(3));
    for (int i = 0, n = static_cast<int>(rng.below(3)); i < n; ++i) y.push_back(rng.below(3));
    SymbolString xy = x, ctx_x = ctx;
    xy.insert(xy.end(), y.begin(), y.end());
    ctx_x.insert(ctx_x.end(), x.begin(), x.end());
    EXPECT_NEAR(cond_prefix_prob(lm, xy, ctx),
                cond_prefix_prob(lm, x, ctx) + cond_prefix_prob(lm, y, ctx_x), 1e-12);
    double rhs = std::exp(seq_prob(lm, ctx));
    for (Symbol s = 0; s < 3; ++s) {
      SymbolString ext = ctx;
      ext.push_back(s);
      EXPECT_LE(prefix_prob(lm, ext), prefix_prob(lm, ctx));
      rhs += std::exp(prefix_prob(lm, ext));
    }
    EXPECT_NEAR(rhs, std::exp(prefix_prob(lm, ctx)), 1e-9);
  }
}

TEST(Sample, TwoStringFrequency) {
  auto lm = two_string_lm();
  int a = 0;
  const int n = 10000;
  Rng rng(2024);
  for (int i = 0; i < n; ++i) a += sample(*lm, 50, rng) == SymbolString{0};
  const double sd = std::sqrt(n * 0.25);
  EXPECT_LE(std::abs(a - n / 2.0), 3 * sd);
}

TEST(Sample, DeterministicAndTruncated) {
  oracle::RandomNGramLm lm(letters(3), 2, 5, 1.0, 0.001);
  EXPECT_EQ(sample(lm, 50, 99), sample(lm, 50, 99));
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_LE(sample(lm, 4, s).size(), 4u);
}

std::vector<SymbolString> bytes_of(const std::vector<std::string>& lines) {
  std::vector<SymbolString> out;
  for (const auto& l : lines) {
    SymbolString s;
    for (unsigned char c : l) s.push_back(c);
    out.push_back(std::move(s));
  }
  return out;
}

TEST(NGram, AddOneUnigramHandCount) {
  auto lm = NGramModel::train({{0, 1}}, letters(2), 1, {SmoothingKind::kAddLambda, 1.0, {}});
  const auto p = lm.next_dist(SymbolString{});
  EXPECT_NEAR(p[0], 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(p[1], 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(p[2], 2.0 / 6.0, 1e-12);
  EXPECT_EQ(lm.next_dist(SymbolString{0, 0, 1}), p);
}

TEST(NGram, EmptyCorpus) {
  try {
    NGramModel::train({}, letters(2), 2, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

// Interpolated Kneser-Ney written out from the definition over raw counts.
double kn_oracle(const std::vector<SymbolString>& corpus, int v, int n,
                 const std::vector<double>& d, const SymbolString& context, Symbol x) {
  std::vector<std::vector<Symbol>> grams;
  for (const auto& s : corpus) {
    std::vector<Symbol> padded(n - 1, v);
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(v);
    for (std::size_t i = n - 1; i < padded.size(); ++i) {
      grams.emplace_back(padded.begin() + (i - (n - 1)), padded.begin() + i + 1);
    }
  }
  std::vector<Symbol> h(n - 1, v);
  h.insert(h.end(), context.begin(), context.end());
  h.erase(h.begin(), h.end() - (n - 1));
  std::function<double(int, std::vector<Symbol>, Symbol)> p = [&](int k, std::vector<Symbol> hist,
                                                                  Symbol y) -> double {
    if (k < 0) return 1.0 / (v + 1);
    auto count = [&](Symbol z) {
      std::vector<Symbol> target = hist;
      target.push_back(z);
      if (k == n - 1) {
        return static_cast<double>(std::count(grams.begin(), grams.end(), target));
      }
      std::set<Symbol> left;
      for (const auto& g : grams) {
        if (std::equal(target.begin(), target.end(), g.end() - target.size())) {
          left.insert(*(g.end() - target.size() - 1));
        }
      }
      return static_cast<double>(left.size());
    };
    double total = 0, types = 0;
    for (Symbol z = 0; z <= v; ++z) {
      const double c = count(z);
      total += c;
      types += c > 0;
    }
    std::vector<Symbol> shorter(hist.begin() + (hist.empty() ? 0 : 1), hist.end());
    if (total == 0) return p(k - 1, shorter, y);
    return std::max(count(y) - d[k], 0.0) / total + d[k] * types / total * p(k - 1, shorter, y);
  };
  return p(n - 1, h, x);
}

TEST(NGram, KneserNeyMatchesOracle) {
  const std::vector<SymbolString> corpus = {{0, 1, 2}, {1, 1}, {0, 2, 1, 0}, {2}, {0, 1}};
  for (int n = 1; n <= 3; ++n) {
    std::vector<double> d(n);
    for (int k = 0; k < n; ++k) d[k] = 0.4 + 0.15 * k;
    auto lm = NGramModel::train(corpus, letters(3), n, {SmoothingKind::kKneserNey, 1.0, d});
    for (const auto& ctx : oracle::all_strings(3, 3)) {
      const auto p = lm.next_dist(ctx);
      for (Symbol x = 0; x <= 3; ++x) {
        ASSERT_NEAR(p[x], kn_oracle(corpus, 3, n, d, ctx, x), 1e-12) << "n=" << n;
      }
    }
  }
}

TEST(NGram, NormalizedWithPositiveEos) {
  const auto corpus = bytes_of({"the cat sat", "the dog ran", "a cat ran"});
  for (auto kind : {SmoothingKind::kAddLambda, SmoothingKind::kKneserNey}) {
    for (int n = 1; n <= 4; ++n) {
      auto lm = NGramModel::train(corpus, make_alphabet(Alphabet::bytes(false)), n, {kind, 0.1, {}});
      for (const std::string ctx : {"", "the", "the c", "zzz", "a cat ran"}) {
        const SymbolString s(ctx.begin(), ctx.end());
        const auto lp = lm.log_next(lm.state_of(s));
        ASSERT_NEAR(sum_exp(lp), 1.0, 1e-9);
        ASSERT_GT(lp.back(), kNegInf);
      }
    }
  }
}

TEST(NGram, BigramBeatsUnigramOnBigramSource) {
  oracle::RandomNGramLm source(letters(4), 2, 11, 3.0, 0.1);
  std::vector<SymbolString> train, test;
  for (std::uint64_t i = 0; i < 2000; ++i) train.push_back(sample(source, 30, i));
  for (std::uint64_t i = 5000; i < 5300; ++i) test.push_back(sample(source, 30, i));
  auto perplexity = [&](const LanguageModel& lm) {
    double ll = 0, n = 0;
    for (const auto& s : test) {
      ll += seq_prob(lm, s);
      n += s.size() + 1;
    }
    return std::exp(-ll / n);
  };
  for (auto kind : {SmoothingKind::kAddLambda, SmoothingKind::kKneserNey}) {
    auto uni = NGramModel::train(train, letters(4), 1, {kind, 0.5, {}});
    auto bi = NGramModel::train(train, letters(4), 2, {kind, 0.5, {}});
    EXPECT_LE(perplexity(bi), perplexity(uni));
  }
}

TEST(NGram, JsonRoundTrip) {
  const auto corpus = bytes_of({"ab ab", "b\xff", ""});
  auto lm = NGramModel::train(corpus, make_alphabet(Alphabet::bytes(false)), 3, {});
  auto back = NGramModel::from_json(lm.to_json());
  EXPECT_EQ(back.to_json(), lm.to_json());
  for (const auto& s : bytes_of({"", "a", "ab a", "\xff"})) {
    EXPECT_EQ(back.log_next(back.state_of(s)), lm.log_next(lm.state_of(s)));
  }
  EXPECT_THROW(NGramModel::from_json("{\"format\": \"other\"}"), Error);
  EXPECT_THROW(NGramModel::from_json("not json"), Error);
}

TEST(Bpe, LearnsFrequentPairs) {
  auto bpe = BpeTokenizer::learn({"low lower lowest", "low low"}, 10);
  const auto ids = bpe.encode("low lower");
  EXPECT_EQ(bpe.decode(ids), "low lower");
  EXPECT_LT(ids.size(), 9u);
  // Chunks keep the space in front of a word.
  EXPECT_EQ(bpe.alphabet()->spelling(ids[1]).front(), ' ');
  for (const std::string s : {"", "unseen\xe2\x82\xac text", "  two  spaces "}) {
    EXPECT_EQ(bpe.decode(bpe.encode(s)), s);
  }
  auto again = BpeTokenizer::from_json(bpe.to_json());
  EXPECT_EQ(again.encode("lowest low"), bpe.encode("lowest low"));
  EXPECT_EQ(*again.alphabet(), *bpe.alphabet());
}

TEST(Bpe, Pretokenize) {
  const auto c = pretokenize("Tokens don't  equal");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], "Tokens");
  EXPECT_EQ(c[1], " don't");
  EXPECT_EQ(c[2], "  equal");
}

}  // namespace
}  // namespace unitsurp
