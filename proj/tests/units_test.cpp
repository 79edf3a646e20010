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

#include <set>

#include "oracles/fst_oracle.hpp"
#include "oracles/rewrite_oracle.hpp"
#include "unitsurp/error.hpp"
#include "unitsurp/fst/operations.hpp"
#include "unitsurp/units/delimiter.hpp"
#include "unitsurp/units/hcode.hpp"
#include "unitsurp/units/inventory.hpp"
#include "unitsurp/units/rewrite.hpp"

namespace unitsurp {
namespace {

using Units = std::vector<std::string>;

AlphabetPtr bytes() { return make_alphabet(Alphabet::bytes(false)); }
AlphabetPtr bytes_sep() { return make_alphabet(Alphabet::bytes(true)); }

// Output of a byte machine with SEP printed as '|'.
std::string show(const Transducer& f, const std::string& text) {
  const auto out = apply_fst(f, f.input_alphabet().encode_bytes(text));
  std::string s;
  for (Symbol x : out) s += f.output_alphabet().is_sep(x) ? "|" : f.output_alphabet().spelling(x);
  return s;
}

std::string from_oracle(std::string s) {
  for (char& c : s) {
    if (c == oracle::kSepByte) c = '|';
  }
  return s;
}

UnitInventorySpec acontextual(Attribution a, std::string delim = " ") {
  UnitInventorySpec spec;
  spec.kind = InventoryKind::kAcontextual;
  spec.attribution = a;
  spec.delimiters = {delim};
  return spec;
}

UnitInventorySpec contextual() {
  UnitInventorySpec spec;
  spec.kind = InventoryKind::kContextual;
  spec.attribution = Attribution::kAbsorb;
  spec.rules = default_rules();
  return spec;
}

const UnitParser& contextual_parser() {
  static const UnitParser p = UnitParser::compile(contextual());
  return p;
}

TEST(DelimiterFst, AttributionTraces) {
  const std::vector<Symbol> us{'_'};
  EXPECT_EQ(show(delimiter_fst(bytes(), bytes_sep(), us, Attribution::kLeading), "Hale_cited"),
            "Hale|_cited|");
  EXPECT_EQ(show(delimiter_fst(bytes(), bytes_sep(), us, Attribution::kTrailing), "Hale_cited"),
            "Hale_|cited|");
  EXPECT_EQ(show(delimiter_fst(bytes(), bytes_sep(), us, Attribution::kAbsorb), "a_b"), "a|b|");
}

TEST(DelimiterFst, RepeatedAndEdgeDelimiters) {
  const std::vector<Symbol> us{'_'};
  auto lead = delimiter_fst(bytes(), bytes_sep(), us, Attribution::kLeading);
  auto trail = delimiter_fst(bytes(), bytes_sep(), us, Attribution::kTrailing);
  auto absorb = delimiter_fst(bytes(), bytes_sep(), us, Attribution::kAbsorb);
  EXPECT_EQ(show(lead, "_a_b"), "_a|_b|");
  EXPECT_EQ(show(trail, "a__b_"), "a__|b_|");
  EXPECT_EQ(show(absorb, "__a__b__"), "a|b|");
  EXPECT_EQ(show(absorb, "__"), "");
  EXPECT_EQ(show(lead, ""), "");
}

TEST(DelimiterFst, MatchesStringOracle) {
  auto in = make_alphabet(Alphabet::from_labels({"a", "b", "_"}));
  auto out = make_alphabet(Alphabet::from_labels({"a", "b", "_", "<sep>"}));
  for (const char* attr : {"leading", "trailing", "absorb"}) {
    auto f = delimiter_fst(in, out, {in->at("_")}, parse_attribution(attr));
    for (const auto& x : oracle::all_strings(3, 6)) {
      const std::string text = in->spell(x);
      const auto units = spell_units(h_decode(apply_fst(f, x), *out->sep()), *out);
      ASSERT_EQ(units, oracle::delimiter_units(text, '_', attr)) << attr << " " << text;
    }
  }
}

TEST(DelimiterFst, EmptySet) {
  EXPECT_THROW(delimiter_fst(bytes(), bytes_sep(), {}, Attribution::kLeading), Error);
  try {
    delimiter_fst(bytes(), bytes_sep(), {}, Attribution::kLeading);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDelimiterSet);
  }
}

AlphabetPtr tokens(const std::vector<std::string>& spellings) {
  Alphabet a;
  for (const auto& s : spellings) {
    std::string label;
    for (char c : s) label += Alphabet::byte_label(static_cast<unsigned char>(c));
    a.add(label, s);
  }
  return make_alphabet(std::move(a));
}

TEST(CharFst, SpellsEachCharacterAsAUnit) {
  auto t = tokens({" cat", "Dog", "\xc3", "\xa9t"});
  auto f = char_fst(t, bytes_sep());
  auto show_tokens = [&](const SymbolString& x) {
    std::string s;
    for (Symbol y : apply_fst(f, x)) {
      s += f.output_alphabet().is_sep(y) ? "|" : f.output_alphabet().spelling(y);
    }
    return s;
  };
  EXPECT_EQ(show_tokens({0}), " |c|a|t|");
  EXPECT_EQ(show_tokens({}), "");
  EXPECT_EQ(show_tokens({1, 0}), show_tokens({1}) + show_tokens({0}));
  // A character split across tokens is still one unit.
  EXPECT_EQ(show_tokens({2, 3}), "\xc3\xa9|t|");
  EXPECT_EQ(show_tokens({2, 2, 3}), "\xc3|\xc3\xa9|t|");
}

TEST(CharFst, EmptySpelling) {
  Alphabet a;
  a.add("x", "");
  try {
    char_fst(make_alphabet(std::move(a)), bytes_sep());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySpelling);
  }
}

TEST(CompileRule, FigureFourCommaRule) {
  const auto rule = parse_rule("[,:] -> <sep>$0<sep> / __ [^0-9]|$");
  auto f = compile_rule(rule, bytes(), bytes_sep());
  EXPECT_EQ(show(f, "end, he"), "end|,| he");
  EXPECT_EQ(show(f, "1,000"), "1,000");
  EXPECT_EQ(show(f, "a:"), "a|:|");
}

TEST(CompileRule, NeverMatchingContextIsIdentity) {
  auto f = compile_rule(parse_rule("a -> b / q __"), bytes(), bytes_sep());
  for (const std::string s : {"", "a", "aaa", "banana", "a, b"}) EXPECT_EQ(show(f, s), s);
}

TEST(CompileRule, ParsesDsl) {
  const auto r = parse_rule("n't -> <sep>$0 / [A-Za-z] __ [^A-Za-z]|$");
  EXPECT_EQ(r.pattern, "n't");
  EXPECT_EQ(r.replacement, "<sep>$0");
  EXPECT_EQ(r.left, "[A-Za-z]");
  EXPECT_EQ(r.right, "[^A-Za-z]|$");
  EXPECT_EQ(parse_rule(format_rule(r)), r);
  EXPECT_THROW(parse_rule("abc"), Error);
  EXPECT_THROW(compile_rule(parse_rule("a( -> b"), bytes(), bytes_sep()), Error);
}

// Small-alphabet rules checked against the std::regex rewrite oracle on every
// string up to length 6.
TEST(CompileRule, MatchesRewriteOracleExhaustively) {
  auto in = make_alphabet(Alphabet::from_labels({"a", "b", "c"}));
  auto out = make_alphabet(Alphabet::from_labels({"a", "b", "c", "<sep>"}));
  const std::vector<std::string> rules = {
      "a+ -> <sep>$0<sep>",
      "ab|b -> c",
      "a -> b / b __ c",
      "ba* -> <sep>$0 / ^ __",
      "b -> <sep>$0 / __ $",
      "aa|a -> c / [^a] __ [^b]|$",
      "a*b -> $0<sep> / a __",
      "(ab)+ -> <sep>",
      "c -> <sep>$0<sep> / __ [^a]|$",
      "a|ab|abc -> <sep>$0<sep> / __ c*$",
      "b -> a / a __ ba",
  };
  for (const auto& text : rules) {
    const auto rule = parse_rule(text);
    auto f = compile_rule(rule, in, out);
    for (const auto& x : oracle::all_strings(3, 6)) {
      const std::string s = in->spell(x);
      std::string got;
      for (Symbol y : apply_fst(f, x)) got += out->is_sep(y) ? "|" : out->spelling(y);
      ASSERT_EQ(got, from_oracle(oracle::rewrite(rule, s))) << text << " on '" << s << "'";
    }
  }
}

TEST(ComposeRules, ChainsLikeSequentialRewrites) {
  auto in = make_alphabet(Alphabet::from_labels({"a", "b", "c"}));
  auto out = make_alphabet(Alphabet::from_labels({"a", "b", "c", "<sep>"}));
  const std::vector<RewriteRule> rules = {
      parse_rule("a+ -> <sep>$0<sep> / __ [^c]|$"), parse_rule("b -> <sep>$0 / <sep> __"),
      parse_rule("c -> b / [^<sep>] __")};
  auto f = compose_rules(rules, in, out);
  for (const auto& x : oracle::all_strings(3, 6)) {
    const std::string s = in->spell(x);
    std::string got;
    for (Symbol y : apply_fst(f, x)) got += out->is_sep(y) ? "|" : out->spelling(y);
    ASSERT_EQ(got, from_oracle(oracle::rewrite_all(rules, s))) << s;
  }
}

TEST(ComposeRules, CommaThenQuote) {
  const std::vector<RewriteRule> rules = {parse_rule("[,:] -> <sep>$0<sep> / __ [^0-9]|$"),
                                          parse_rule("\" -> <sep>$0<sep>")};
  auto f = compose_rules(rules, bytes(), bytes_sep());
  const std::vector<std::string> corpus = {"say, \"hi\"", "1,000 \"x\"", "\"a,b\",", ":\"", ""};
  for (const auto& s : corpus) {
    EXPECT_EQ(show(f, s), from_oracle(oracle::rewrite_all(rules, s))) << s;
  }
  EXPECT_EQ(show(f, "say, \"hi\""), "say|,| |\"|hi|\"|");
}

TEST(ComposeRules, EmptyListIsIdentity) {
  auto f = compose_rules({}, bytes(), bytes_sep());
  EXPECT_EQ(show(f, "a b, c"), "a b, c");
}

TEST(ComposeRules, LeadingThenCharacters) {
  auto fl = delimiter_fst(bytes(), bytes_sep(), {'_'}, Attribution::kLeading);
  auto chars = utf8_char_fst(bytes_sep(), bytes_sep(), {*bytes_sep()->sep()});
  auto f = compose(fl, chars);
  EXPECT_EQ(show(f, "a_b"), "a|_|b|");
}

TEST(HCode, EncodeDecode) {
  const Symbol sep = 9;
  const UnitString u = {{0}, {0, 1}};
  EXPECT_EQ(h_encode(u, sep), (SymbolString{0, sep, 0, 1, sep}));
  EXPECT_EQ(h_decode({0, sep}, sep), (UnitString{{0}}));
  EXPECT_EQ(h_decode(h_encode(u, sep), sep), u);
  EXPECT_EQ(h_encode({}, sep), SymbolString{});
}

TEST(HCode, Errors) {
  const Symbol sep = 9;
  try {
    h_decode({0, sep, 1}, sep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrailingGarbage);
  }
  try {
    h_decode({0, sep, sep}, sep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyUnit);
  }
  EXPECT_EQ(h_decode({0, sep, sep}, sep, true).size(), 2u);
  EXPECT_THROW(h_encode({{sep}}, sep), Error);
}

TEST(HCode, PrefixFreeAndHomomorphic) {
  auto a = bytes_sep();
  const Symbol sep = *a->sep();
  const auto the = h_encode({a->encode_bytes("THE")}, sep);
  const auto there = h_encode({a->encode_bytes("THERE")}, sep);
  EXPECT_FALSE(is_prefix(the, there));
  // Without the separator the byte strings do overlap.
  EXPECT_TRUE(is_prefix(a->encode_bytes("THE"), a->encode_bytes("THERE")));
  const auto units = oracle::all_strings(2, 3);
  for (const auto& u1 : units) {
    for (const auto& u2 : units) {
      if (u1.empty() || u2.empty()) continue;
      auto joined = h_encode({u1}, sep);
      auto second = h_encode({u2}, sep);
      joined.insert(joined.end(), second.begin(), second.end());
      EXPECT_EQ(h_encode({u1, u2}, sep), joined);
      if (u1 != u2) EXPECT_FALSE(is_prefix(h_encode({u1}, sep), h_encode({u2}, sep)));
    }
  }
}

TEST(Segment, AcontextualLeadingFigureOne) {
  auto p = UnitParser::compile(acontextual(Attribution::kLeading, "_"));
  EXPECT_EQ(p.segment_text("Tokens_don't_equal_words."),
            (Units{"Tokens", "_don't", "_equal", "_words."}));
}

TEST(Segment, ContextualFigureOne) {
  EXPECT_EQ(contextual_parser().segment_text("Tokens don't equal words."),
            (Units{"Tokens", "do", "n't", "equal", "words", "."}));
  EXPECT_EQ(contextual_parser().segment_text("cat's"), (Units{"cat", "'s"}));
  EXPECT_EQ(contextual_parser().segment_text("don't"), (Units{"do", "n't"}));
  EXPECT_EQ(contextual_parser().segment_text("end, he"), (Units{"end", ",", "he"}));
  EXPECT_EQ(contextual_parser().segment_text("1,000"), (Units{"1,000"}));
  // A medial period stays attached.
  EXPECT_EQ(contextual_parser().segment_text("Mr. Hale left."),
            (Units{"Mr.", "Hale", "left", "."}));
}

TEST(Segment, ContextualMatchesOracleOnCorpus) {
  const std::vector<std::string> corpus = {
      "Tokens don't equal words.",
      "\"Hi,\" she said (quietly): it's 1,000 dollars!",
      "They'll say we're late; I'd disagree.",
      "  leading  and trailing spaces  ",
      "A list: [one], {two} & #three?",
      "End with quote.\"",
      "Numbers 3,5 and 1:2 stay, but 4, does not.",
      "tab\tand\nnewline, too.",
      "CAN'T STOP WON'T STOP.",
      "",
  };
  for (const auto& s : corpus) {
    const auto want = oracle::absorb_units(oracle::rewrite_all(default_rules(), s));
    EXPECT_EQ(contextual_parser().segment_text(s), want) << s;
  }
}

TEST(Segment, TokensInventoryIsIdentity) {
  auto t = tokens({"ab", "c", " d"});
  UnitInventorySpec spec;
  spec.kind = InventoryKind::kTokens;
  auto p = UnitParser::compile_for_tokens(spec, t);
  const UnitString us = p.segment({0, 1, 2, 0});
  ASSERT_EQ(us.size(), 4u);
  EXPECT_EQ(p.unit_text(us[2]), " d");
  EXPECT_EQ(p.encode_unit(" d"), us[2]);
}

TEST(Segment, TokenLevelSpellingComposition) {
  auto t = tokens({"Ha", "le", " c", "ited"});
  auto p = UnitParser::compile_for_tokens(acontextual(Attribution::kLeading), t);
  const auto us = p.segment({0, 1, 2, 3});
  EXPECT_EQ(spell_units(us, p.output_alphabet()), (Units{"Hale", " cited"}));
}

TEST(Segment, ContextIndependence) {
  const auto& c = contextual_parser();
  const auto a = c.segment_text("Hale cited Levy.");
  const auto b = c.segment_text("Levy cited Hale.");
  EXPECT_EQ(a.front(), "Hale");
  EXPECT_EQ(b[2], "Hale");
  auto absorb = UnitParser::compile(acontextual(Attribution::kAbsorb));
  EXPECT_EQ(absorb.segment_text("Hale cited Levy").front(), "Hale");
  EXPECT_EQ(absorb.segment_text("Levy cited Hale").back(), "Hale");
  // Leading attribution is where the pathology shows: the same word differs.
  auto lead = UnitParser::compile(acontextual(Attribution::kLeading));
  EXPECT_NE(lead.segment_text("Hale cited Levy").front(), lead.segment_text("Levy cited Hale").back());
}

TEST(Segment, RealizationIsARelation) {
  auto absorb = UnitParser::compile(acontextual(Attribution::kAbsorb));
  EXPECT_EQ(absorb.segment_text("Hale cited Levy."), absorb.segment_text("Hale cited  Levy."));
  EXPECT_EQ(contextual_parser().segment_text("Hale cited Levy."),
            contextual_parser().segment_text("Hale  cited   Levy."));
}

TEST(Segment, PrefixIdentity) {
  auto in = make_alphabet(Alphabet::from_labels({"a", "b", "c", "_"}));
  auto out = make_alphabet(Alphabet::from_labels({"a", "b", "c", "_", "<sep>"}));
  const Symbol sep = *out->sep();
  for (const char* attr : {"leading", "trailing", "absorb"}) {
    auto f = delimiter_fst(in, out, {in->at("_")}, parse_attribution(attr));
    std::set<UnitString> candidates;
    for (const auto& x : oracle::all_strings(4, 4)) {
      const auto us = h_decode(apply_fst(f, x), sep);
      for (std::size_t k = 0; k <= us.size(); ++k) {
        candidates.insert(UnitString(us.begin(), us.begin() + k));
      }
    }
    for (const auto& x : oracle::all_strings(4, 6)) {
      const auto rho = h_decode(apply_fst(f, x), sep);
      const auto coded = h_encode(rho, sep);
      for (const auto& u : candidates) {
        const bool unit_prefix =
            u.size() <= rho.size() && std::equal(u.begin(), u.end(), rho.begin());
        ASSERT_EQ(unit_prefix, is_prefix(h_encode(u, sep), coded)) << attr;
      }
    }
  }
}

TEST(InventorySpec, JsonRoundTrip) {
  auto spec = UnitInventorySpec::from_json(
      R"({"kind": "acontextual", "delimiters": ["_"], "attribution": "trailing"})");
  EXPECT_EQ(spec.kind, InventoryKind::kAcontextual);
  EXPECT_EQ(spec.attribution, Attribution::kTrailing);
  EXPECT_EQ(spec.delimiters, (std::vector<std::string>{"_"}));
  auto ctx = UnitInventorySpec::from_json(R"({"kind": "contextual", "rules": "default"})");
  EXPECT_EQ(ctx.rules, default_rules());
  auto again = UnitInventorySpec::from_json(ctx.to_json());
  EXPECT_EQ(again.rules, ctx.rules);
  auto custom = UnitInventorySpec::from_json(
      R"({"kind": "contextual", "rules": [{"pattern": "[,:]", "right": "[^0-9]|$"}]})");
  EXPECT_EQ(custom.rules.at(0).replacement, "<sep>$0<sep>");
  EXPECT_THROW(UnitInventorySpec::from_json(R"({"kind": "contextual"})"), Error);
  EXPECT_THROW(UnitInventorySpec::from_json(R"({"kind": "acontextual", "delimiters": []})"), Error);
  EXPECT_THROW(UnitInventorySpec::from_json("{"), Error);
}

TEST(InventorySpec, CharactersInventory) {
  UnitInventorySpec spec;
  spec.kind = InventoryKind::kCharacters;
  spec.attribution = Attribution::kNone;
  auto p = UnitParser::compile(spec);
  EXPECT_EQ(p.segment_text("h\xc3\xa9 y"), (Units{"h", "\xc3\xa9", " ", "y"}));
  spec.attribution = Attribution::kAbsorb;
  auto q = UnitParser::compile(spec);
  EXPECT_EQ(q.segment_text("h\xc3\xa9 y"), (Units{"h", "\xc3\xa9", "y"}));
}

}  // namespace
}  // namespace unitsurp
