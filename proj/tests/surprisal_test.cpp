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
#include <fstream>
#include <set>
#include <sstream>

#include "oracles/fst_oracle.hpp"
#include "oracles/pushforward_oracle.hpp"
#include "oracles/random_lm.hpp"
#include "oracles/random_machines.hpp"
#include "unitsurp/error.hpp"
#include "unitsurp/lm/bpe.hpp"
#include "unitsurp/lm/ngram.hpp"
#include "unitsurp/logspace.hpp"
#include "unitsurp/surprisal/surprisal.hpp"

namespace unitsurp {
namespace {

using oracle::letters;

AlphabetPtr tokens(const std::vector<std::string>& spellings) {
  Alphabet a;
  for (const auto& s : spellings) {
    std::string label;
    for (char c : s) label += Alphabet::byte_label(static_cast<unsigned char>(c));
    a.add(label, s);
  }
  return make_alphabet(std::move(a));
}

UnitInventorySpec acontextual(Attribution a) {
  UnitInventorySpec spec;
  spec.kind = InventoryKind::kAcontextual;
  spec.attribution = a;
  return spec;
}

UnitInventorySpec tokens_spec() {
  UnitInventorySpec spec;
  spec.kind = InventoryKind::kTokens;
  return spec;
}

LmPtr toy_lm() {
  return std::make_shared<FiniteSupportModel>(
      letters(2), std::vector<std::pair<SymbolString, double>>{{{0}, 0.5}, {{0, 1}, 0.5}});
}

// Whole string is one unit, SEP after it.
Transducer completion_machine() {
  TransducerBuilder b(letters(2), letters(2, true));
  b.add_state();
  b.add_initial(0);
  b.add_arc(0, 0, Symbol{0}, 0);
  b.add_arc(0, 1, Symbol{1}, 0);
  b.set_final(0, {2});
  return std::move(b).build();
}

// Whole string is one unit, SEP before it.
Transducer onset_machine() {
  TransducerBuilder b(letters(2), letters(2, true));
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

// Small token vocabulary with spaces, bounded so every oracle enumerates
// the full distribution.
AlphabetPtr spaced() { return tokens({"a", "b", " "}); }

LmPtr bounded_lm(std::uint64_t seed, int order, std::size_t len) {
  auto base = std::make_shared<oracle::RandomNGramLm>(spaced(), order, seed, 1.0, 0.15);
  return std::make_shared<BoundedLengthModel>(base, len);
}

std::vector<Trial> all_trials(const LanguageModel& lm, int len) {
  std::vector<Trial> trials;
  for (const auto& [sigma, p] : oracle::source_distribution(lm, len)) {
    trials.push_back({"t" + std::to_string(trials.size()), sigma});
  }
  return trials;
}

double exact_unit_conditional(const std::map<UnitString, double>& dist, UnitString ctx,
                              const Unit& u) {
  const double z = oracle::unit_prefix_mass(dist, ctx);
  ctx.push_back(u);
  return oracle::unit_prefix_mass(dist, ctx) / z;
}

TEST(UnitSurprisal, CompletionMachineExample) {
  auto m = std::make_shared<const ScoringMachine>(completion_machine());
  PrefixScorer scorer(toy_lm(), m, BeamConfig::no_pruning());
  EXPECT_NEAR(unit_surprisal(scorer, {}, {0}), std::log(2.0), 1e-12);
  EXPECT_NEAR(unit_surprisal(scorer, {}, {0, 1}), std::log(2.0), 1e-12);
  EXPECT_THROW(unit_surprisal(scorer, {{1}}, {0}), Error);
}

TEST(UnitSurprisal, OnsetCodeLosesTheBoundary) {
  PrefixScorer scorer(toy_lm(), onset_machine(), BeamConfig::no_pruning());
  // Under the onset code the prefix SEP a is shared by both strings, so the
  // "surprisal" of u_a comes out 0 instead of log 2.
  const double s = -(scorer.prefix_mass({2, 0}) - scorer.prefix_mass({}));
  EXPECT_NEAR(s, 0.0, 1e-12);
  EXPECT_GT(std::abs(s - std::log(2.0)), 0.5);
}

TEST(UnitSurprisal, ForcedUnitIsFree) {
  // Every string starts with 'a' under this model.
  auto lm = std::make_shared<FiniteSupportModel>(
      spaced(), std::vector<std::pair<SymbolString, double>>{{{0, 2, 1}, 0.3}, {{0, 2, 0}, 0.7}});
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kAbsorb), spaced());
  PrefixScorer scorer(lm, p.fst(), BeamConfig{});
  EXPECT_NEAR(unit_surprisal(scorer, {}, p.encode_unit("a")), 0.0, 1e-12);
  EXPECT_NEAR(unit_surprisal(scorer, {p.encode_unit("a")}, p.encode_unit("b")), -std::log(0.3),
              1e-12);
}

TEST(UnitSurprisal, MatchesPreimageEnumeration) {
  Rng rng(11);
  int checked = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto attr = static_cast<Attribution>(inst % 3);
    const int len = 4;
    auto lm = bounded_lm(100 + inst, 1 + inst % 2, len);
    auto p = UnitParser::compile_for_tokens(acontextual(attr), spaced());
    const auto dist = oracle::unit_distribution(*lm, p.fst(), p.sep(), len);
    PrefixScorer scorer(lm, p.fst(), BeamConfig::no_pruning());
    // A few contexts drawn from the distribution itself.
    for (int k = 0; k < 3; ++k) {
      const auto sigma = sample(*lm, len, rng);
      const auto units = p.segment(sigma);
      for (std::size_t t = 0; t < units.size(); ++t) {
        const UnitString ctx(units.begin(), units.begin() + t);
        const double exact = exact_unit_conditional(dist, ctx, units[t]);
        ASSERT_NEAR(unit_surprisal(scorer, ctx, units[t]), -std::log(exact), 1e-9) << inst;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(ScoreCorpus, ChainRuleMatchesPushforward) {
  const int len = 4;
  auto lm = bounded_lm(7, 2, len);
  for (auto attr : {Attribution::kLeading, Attribution::kTrailing, Attribution::kAbsorb}) {
    auto p = UnitParser::compile_for_tokens(acontextual(attr), spaced());
    const auto push = pushforward_exact(*lm, p.fst(), len);
    const auto trials = all_trials(*lm, len);
    ScoreOptions opt;
    opt.beam = BeamConfig::no_pruning();
    const auto table = score_corpus(lm, p, trials, opt);
    for (const auto& trial : trials) {
      double total = 0.0;
      const auto rows = table.trial_rows(trial.id);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i]->position, i + 1);
        EXPECT_GE(rows[i]->surprisal, 0.0);
        total += rows[i]->surprisal;
      }
      ASSERT_TRUE(rows.back()->eos);
      const double full = push.prob.at(p.transduce(trial.source));
      EXPECT_NEAR(total, -std::log(full), 1e-9) << trial.id;
    }
  }
}

TEST(ScoreCorpus, TokensInventoryIsTheLm) {
  auto lm = std::make_shared<oracle::RandomNGramLm>(spaced(), 2, 5);
  auto p = UnitParser::compile_for_tokens(tokens_spec(), spaced());
  Rng rng(3);
  std::vector<Trial> trials;
  for (int i = 0; i < 10; ++i) trials.push_back({"s" + std::to_string(i), sample(*lm, 12, rng)});
  const auto table = score_corpus(lm, p, trials, ScoreOptions{});
  for (const auto& trial : trials) {
    const auto rows = table.trial_rows(trial.id);
    ASSERT_EQ(rows.size(), trial.source.size() + 1);
    for (std::size_t t = 0; t < trial.source.size(); ++t) {
      const std::span<const Symbol> ctx(trial.source.data(), t);
      const double want = -cond_prefix_prob(*lm, {&trial.source[t], 1}, ctx);
      EXPECT_NEAR(rows[t]->surprisal, want, 1e-12);
      EXPECT_EQ(rows[t]->unit, spaced()->spelling(trial.source[t]));
    }
    const double eos = -(seq_prob(*lm, trial.source) - prefix_prob(*lm, trial.source));
    EXPECT_NEAR(rows.back()->surprisal, eos, 1e-12);
  }
}

TEST(ScoreCorpus, AttributionChangesUnitsNotTotals) {
  auto lm = std::make_shared<oracle::RandomNGramLm>(spaced(), 2, 9, 1.0, 0.1);
  auto lead = UnitParser::compile_for_tokens(acontextual(Attribution::kLeading), spaced());
  auto trail = UnitParser::compile_for_tokens(acontextual(Attribution::kTrailing), spaced());
  const std::vector<Trial> trials = {{"x", {0, 2, 1, 1, 2, 0}}, {"y", {1, 0, 2, 2, 1}}};
  ScoreOptions opt;
  opt.beam = BeamConfig::no_pruning();
  opt.beam.max_expand_steps = 64;
  const auto a = score_corpus(lm, lead, trials, opt);
  const auto b = score_corpus(lm, trail, trials, opt);
  for (const auto& trial : trials) {
    double ta = 0.0, tb = 0.0;
    for (const auto* r : a.trial_rows(trial.id)) ta += r->surprisal;
    for (const auto* r : b.trial_rows(trial.id)) tb += r->surprisal;
    EXPECT_NEAR(ta, tb, 1e-9);
    EXPECT_NEAR(ta, -seq_prob(*lm, trial.source), 1e-9);
  }
  EXPECT_GT(std::abs(a.rows[0].surprisal - b.rows[0].surprisal), 1e-6);
  EXPECT_EQ(a.rows[1].unit, " bb");
  EXPECT_EQ(b.rows[0].unit, "a ");
  EXPECT_EQ(a.rows[1].length, 3u);
}

TEST(ScoreCorpus, ErrorsNameTheTrial) {
  auto lm = toy_lm();
  auto p = UnitParser::compile_for_tokens(tokens_spec(), letters(2));
  try {
    score_corpus(lm, p, {{"ok", {0}}, {"bad", {1, 0}}}, ScoreOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPrefixMass);
    EXPECT_NE(std::string(e.what()).find("trial bad"), std::string::npos);
  }
}

TEST(ScoreCorpus, ParallelMatchesSerial) {
  auto lm = std::make_shared<oracle::RandomNGramLm>(spaced(), 2, 21);
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kAbsorb), spaced());
  Rng rng(4);
  std::vector<Trial> trials;
  for (int i = 0; i < 12; ++i) trials.push_back({std::to_string(i), sample(*lm, 10, rng)});
  ScoreOptions serial, par;
  par.jobs = 4;
  const auto a = score_corpus(lm, p, trials, serial);
  const auto b = score_corpus(lm, p, trials, par);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].trial, b.rows[i].trial);
    EXPECT_EQ(a.rows[i].surprisal, b.rows[i].surprisal);
  }
}

// Character and trailing units read off subword tokens: each output prefix
// has many segmentations and shared spellings behind it. The default beam
// has to keep the observed continuation and stay close to the exact total.
TEST(ScoreCorpus, DefaultBeamOverSubwords) {
  std::ifstream in(std::string(UNITSURP_TEST_DATA) + "/corpus.txt");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) lines.push_back(l);
  }
  const auto bpe = BpeTokenizer::learn(lines, 60);
  std::vector<SymbolString> seqs;
  for (const auto& l : lines) seqs.push_back(bpe.encode(l));
  auto lm = std::make_shared<NGramModel>(NGramModel::train(seqs, bpe.alphabet(), 2, Smoothing{}));
  const std::vector<Trial> trials{{"s", bpe.encode("The dog sat on the mat.")},
                                  {"t", bpe.encode("She didn't see the train.")}};
  for (auto [kind, a] : {std::pair{InventoryKind::kCharacters, Attribution::kNone},
                         std::pair{InventoryKind::kAcontextual, Attribution::kTrailing},
                         std::pair{InventoryKind::kAcontextual, Attribution::kLeading}}) {
    UnitInventorySpec spec;
    spec.kind = kind;
    spec.attribution = a;
    const auto p = UnitParser::compile_for_tokens(spec, bpe.alphabet());
    ScoreOptions beam, exact;
    exact.beam = BeamConfig::no_pruning();
    const auto approx = score_corpus(lm, p, trials, beam);
    const auto truth = score_corpus(lm, p, trials, exact);
    for (const auto& t : trials) {
      double sa = 0.0, st = 0.0;
      for (const auto* r : approx.trial_rows(t.id)) sa += r->surprisal;
      for (const auto* r : truth.trial_rows(t.id)) st += r->surprisal;
      EXPECT_GE(sa, st - 1e-9) << spec.name() << " " << t.id;
      EXPECT_LT(sa - st, 0.05) << spec.name() << " " << t.id;
    }
  }
}

TEST(Unigram, ContextFreeModelIsExact) {
  // Order 1: every symbol is drawn independently, so a one-symbol unit has
  // the same conditional in every context.
  auto ab = letters(2);
  auto lm = std::make_shared<oracle::RandomNGramLm>(ab, 1, 5, 1.0, 0.2);
  auto p = UnitParser::compile_for_tokens(tokens_spec(), ab);
  const auto next = lm->next_dist({});
  for (std::size_t samples : {1u, 7u, 50u}) {
    UnigramOptions opt;
    opt.samples = samples;
    opt.seed = 3;
    const auto est = unigram_estimate(lm, p, {"a", "b"}, opt);
    for (Symbol x : {0, 1}) {
      const auto& e = est.at(ab->spelling(x));
      if (!e.surprisal) continue;  // a single sample may be empty
      EXPECT_NEAR(*e.surprisal, -std::log(next[x]), 1e-12);
    }
  }
}

TEST(Unigram, CompletionMachineExample) {
  auto lm = toy_lm();
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kAbsorb), tokens({"a", "b"}));
  for (std::size_t s : {1u, 5u, 40u}) {
    UnigramOptions opt;
    opt.samples = s;
    opt.seed = 17;
    const auto est = unigram_estimate(lm, p, {"a", "ab", "zz"}, opt);
    EXPECT_NEAR(*est.at("a").surprisal, std::log(2.0), 1e-12);
    EXPECT_NEAR(*est.at("ab").surprisal, std::log(2.0), 1e-12);
    EXPECT_FALSE(est.at("zz").surprisal);
  }
}

TEST(Unigram, MonteCarloWithinThreeErrors) {
  const int len = 5;
  auto lm = bounded_lm(31, 2, len);
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kAbsorb), spaced());
  const auto dist = oracle::unit_distribution(*lm, p.fst(), p.sep(), len);
  std::map<std::string, double> num;
  double den = 0.0;
  std::set<std::string> cands;
  for (const auto& [units, pu] : dist) {
    for (const auto& u : units) cands.insert(p.unit_text(u));
  }
  for (const auto& [units, pu] : dist) {
    den += pu * static_cast<double>(units.size());
    for (std::size_t t = 0; t < units.size(); ++t) {
      const UnitString ctx(units.begin(), units.begin() + t);
      for (const auto& c : cands) num[c] += pu * exact_unit_conditional(dist, ctx, p.encode_unit(c));
    }
  }
  UnigramOptions opt;
  opt.samples = 3000;
  opt.max_len = 20;
  opt.seed = 99;
  opt.beam = BeamConfig::no_pruning();
  const auto est = unigram_estimate(lm, p, {cands.begin(), cands.end()}, opt);
  for (const auto& c : cands) {
    const double exact = -std::log(num[c] / den);
    const auto& e = est.at(c);
    ASSERT_TRUE(e.surprisal) << c;
    EXPECT_GT(e.std_error, 0.0);
    EXPECT_LE(std::abs(*e.surprisal - exact), 3 * e.std_error) << c;
  }
}

TEST(Unigram, DeterministicAcrossJobs) {
  auto lm = bounded_lm(5, 2, 6);
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kAbsorb), spaced());
  UnigramOptions opt;
  opt.samples = 60;
  opt.seed = 1;
  const auto a = unigram_estimate(lm, p, {"a", "ab", "ba"}, opt);
  opt.jobs = 3;
  const auto b = unigram_estimate(lm, p, {"a", "ab", "ba"}, opt);
  for (const auto& [u, e] : a) {
    EXPECT_EQ(e.surprisal, b.at(u).surprisal);
    EXPECT_EQ(e.n_contexts, b.at(u).n_contexts);
  }
}

SurprisalTable small_table() {
  auto lm = std::make_shared<oracle::RandomNGramLm>(spaced(), 2, 2);
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kAbsorb), spaced());
  ScoreOptions opt;
  return score_corpus(lm, p, {{"t1", {0, 2, 1, 0}}}, opt);
}

TEST(Roi, SumsUnitSurprisal) {
  const auto table = small_table();
  ASSERT_EQ(table.rows.size(), 3u);
  const auto one = roi_surprisal(table, {"t1", 2, 3});
  EXPECT_EQ(one.value, table.rows[1].surprisal);
  EXPECT_TRUE(one.omits_boundary_mass);
  const auto all = roi_surprisal(table, {"t1", 1, 3});
  EXPECT_NEAR(all.value + table.rows[2].surprisal,
              table.rows[0].surprisal + table.rows[1].surprisal + table.rows[2].surprisal, 1e-15);
  EXPECT_EQ(roi_surprisal(table, {"t1", 1, 2}).value, table.rows[0].surprisal);
}

TEST(Roi, RejectsBadSpans) {
  const auto table = small_table();
  for (Roi r : {Roi{"t1", 0, 1}, Roi{"t1", 2, 2}, Roi{"t1", 1, 4}, Roi{"nope", 1, 2}}) {
    try {
      roi_surprisal(table, r);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSpanOutOfRange);
    }
  }
}

TEST(SurprisalTsv, RoundTrip) {
  auto table = small_table();
  std::map<std::string, UnigramEntry> uni;
  uni["ba"].surprisal = 1.25;
  uni["ba"].n_contexts = 4;
  attach_unigram(table, uni);
  EXPECT_TRUE(table.rows[0].unigram_unscorable);
  EXPECT_EQ(table.rows[1].unigram, 1.25);
  EXPECT_EQ(table.rows[2].flags(), "eos");
  EXPECT_EQ(table.rows[0].flags(), "unigram_unscorable");
  std::stringstream ss;
  write_surprisal_tsv(ss, table, {"seed 1"});
  EXPECT_EQ(ss.str().rfind("# seed 1\n", 0), 0u);
  const auto back = read_surprisal_tsv(ss);
  ASSERT_EQ(back.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].unit, table.rows[i].unit);
    EXPECT_NEAR(back.rows[i].surprisal, table.rows[i].surprisal, 1e-9);
    EXPECT_EQ(back.rows[i].unigram.has_value(), table.rows[i].unigram.has_value());
    EXPECT_EQ(back.rows[i].flags(), table.rows[i].flags());
  }
  std::stringstream us;
  write_unigram_tsv(us, uni);
  const auto ub = read_unigram_tsv(us);
  EXPECT_EQ(ub.at("ba").surprisal, 1.25);
  EXPECT_EQ(ub.at("ba").n_contexts, 4u);
}

TEST(SurprisalTsv, RejectsWrongHeader) {
  std::stringstream ss("trial\tposition\tunit\n");
  EXPECT_THROW(read_surprisal_tsv(ss), Error);
}

}  // namespace
}  // namespace unitsurp
