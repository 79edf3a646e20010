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

#include "unitsurp/surprisal/surprisal.hpp"

#include <cmath>
#include <set>

#include "unitsurp/error.hpp"
#include "unitsurp/io/tsv.hpp"
#include "unitsurp/logspace.hpp"
#include "unitsurp/parallel.hpp"

namespace unitsurp {

namespace {

Symbol sep_of(const PrefixScorer& scorer) {
  auto sep = scorer.machine().output_alphabet().sep();
  if (!sep) fail(ErrorCode::kInvalidArgument, "machine output has no separator symbol");
  return *sep;
}

// Beam arithmetic can leave a rounding-sized negative.
double clamp_surprisal(double s) { return (s < 0.0 && s > -1e-12) ? 0.0 : s; }

const std::vector<std::string> kSurprisalColumns = {
    "trial", "position", "unit", "length", "surprisal", "unigram_surprisal", "flags"};
const std::vector<std::string> kUnigramColumns = {"unit", "unigram_surprisal", "n_contexts"};

}  // namespace

double unit_surprisal(PrefixScorer& scorer, const UnitString& context, const Unit& u) {
  const Symbol sep = sep_of(scorer);
  SymbolString delta = h_encode(context, sep);
  const double z = scorer.prefix_mass(delta);
  if (z == kNegInf) fail(ErrorCode::kZeroPrefixMass, "context has zero prefix mass");
  const auto code = h_encode({u}, sep);
  delta.insert(delta.end(), code.begin(), code.end());
  return clamp_surprisal(-(scorer.prefix_mass(delta) - z));
}

std::string SurprisalRecord::flags() const {
  std::string f;
  if (eos) f = "eos";
  if (unigram_unscorable) f += f.empty() ? "unigram_unscorable" : ",unigram_unscorable";
  return f;
}

std::vector<const SurprisalRecord*> SurprisalTable::trial_rows(const std::string& trial) const {
  std::vector<const SurprisalRecord*> out;
  for (const auto& r : rows) {
    if (r.trial == trial) out.push_back(&r);
  }
  return out;
}

SurprisalTable score_corpus(const LmPtr& lm, const UnitParser& parser,
                            const std::vector<Trial>& trials, const ScoreOptions& options) {
  auto machine = std::make_shared<const ScoringMachine>(parser.fst());
  std::vector<std::vector<SurprisalRecord>> per_trial(trials.size());
  parallel_for(trials.size(), options.jobs, [&](std::size_t i) {
    const Trial& trial = trials[i];
    try {
      PrefixScorer scorer(lm, machine, options.beam);
      const Symbol sep = parser.sep();
      const UnitString units = parser.segment(trial.source);
      SymbolString delta;
      double z = scorer.prefix_mass(delta);
      if (z == kNegInf) fail(ErrorCode::kZeroPrefixMass, "empty prefix has zero mass");
      auto& out = per_trial[i];
      for (std::size_t t = 0; t < units.size(); ++t) {
        delta.insert(delta.end(), units[t].begin(), units[t].end());
        delta.push_back(sep);
        const double z2 = scorer.prefix_mass(delta);
        if (z2 == kNegInf) {
          fail(ErrorCode::kZeroPrefixMass, "unit " + std::to_string(t + 1) + " has zero probability");
        }
        SurprisalRecord r;
        r.trial = trial.id;
        r.position = t + 1;
        r.unit = parser.unit_text(units[t]);
        r.length = utf8_length(r.unit);
        r.surprisal = clamp_surprisal(-(z2 - z));
        out.push_back(std::move(r));
        z = z2;
      }
      SurprisalRecord end;
      end.trial = trial.id;
      end.position = units.size() + 1;
      end.unit = std::string(kEosLabel);
      end.eos = true;
      end.surprisal = clamp_surprisal(-(scorer.score_symbol(delta, scorer.eos()) - z));
      out.push_back(std::move(end));
    } catch (const Error& e) {
      throw e.within("trial " + trial.id);
    }
  });
  SurprisalTable table;
  for (auto& rows : per_trial) {
    for (auto& r : rows) table.rows.push_back(std::move(r));
  }
  return table;
}

std::map<std::string, UnigramEntry> unigram_estimate(const LmPtr& lm, const UnitParser& parser,
                                                     const std::vector<std::string>& candidates,
                                                     const UnigramOptions& options) {
  if (options.samples < 1) fail(ErrorCode::kInvalidArgument, "need at least one sample");
  std::vector<std::optional<Unit>> codes;
  for (const auto& c : candidates) {
    try {
      codes.push_back(parser.encode_unit(c));
    } catch (const Error&) {
      codes.push_back(std::nullopt);
    }
  }
  auto machine = std::make_shared<const ScoringMachine>(parser.fst());
  struct SampleResult {
    double positions = 0.0;
    std::vector<std::pair<std::size_t, double>> mass;  // candidate, summed conditional
    std::vector<std::size_t> contexts;
  };
  std::vector<SampleResult> results(options.samples);
  const Symbol sep = parser.sep();
  parallel_for(options.samples, options.jobs, [&](std::size_t i) {
    Rng rng(derive_seed(options.seed, i));
    const SymbolString sigma = sample(*lm, options.max_len, rng);
    UnitString units;
    try {
      units = parser.segment(sigma);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoPath) throw;
      return;  // outside the parser's domain: no positions
    }
    PrefixScorer scorer(lm, machine, options.beam);
    std::vector<double> acc(codes.size(), 0.0);
    std::vector<std::size_t> seen(codes.size(), 0);
    SampleResult& r = results[i];
    SymbolString context;
    for (std::size_t t = 0; t < units.size(); ++t) {
      double z = kNegInf;
      try {
        z = scorer.prefix_mass(context);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kBeamExhausted) throw;
      }
      if (z > kNegInf) {
        r.positions += 1.0;
        // z is the closed prefix mass at this boundary, shared by every candidate.
        for (std::size_t c = 0; c < codes.size(); ++c) {
          if (!codes[c]) continue;
          SymbolString ext = context;
          ext.insert(ext.end(), codes[c]->begin(), codes[c]->end());
          ext.push_back(sep);
          double lp = kNegInf;
          try {
            lp = scorer.prefix_mass(ext);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kBeamExhausted) throw;
          }
          if (lp > kNegInf) {
            acc[c] += std::exp(lp - z);
            ++seen[c];
          }
        }
      }
      context.insert(context.end(), units[t].begin(), units[t].end());
      context.push_back(sep);
    }
    for (std::size_t c = 0; c < codes.size(); ++c) {
      if (seen[c]) {
        r.mass.emplace_back(c, acc[c]);
        r.contexts.push_back(seen[c]);
      }
    }
  });

  // Ratio estimate sum(a_i) / sum(b_i) over samples, merged in sample order.
  const std::size_t n = codes.size();
  std::vector<double> sa(n, 0.0), saa(n, 0.0), sab(n, 0.0);
  std::vector<std::size_t> ctx(n, 0);
  double sb = 0.0, sbb = 0.0;
  for (const auto& r : results) {
    sb += r.positions;
    sbb += r.positions * r.positions;
    for (std::size_t k = 0; k < r.mass.size(); ++k) {
      const auto [c, a] = r.mass[k];
      sa[c] += a;
      saa[c] += a * a;
      sab[c] += a * r.positions;
      ctx[c] += r.contexts[k];
    }
  }
  const double s = static_cast<double>(options.samples);
  std::map<std::string, UnigramEntry> out;
  for (std::size_t c = 0; c < n; ++c) {
    UnigramEntry e;
    e.n_contexts = ctx[c];
    if (sa[c] > 0.0 && sb > 0.0) {
      const double ratio = sa[c] / sb;
      e.surprisal = -std::log(ratio);
      if (s > 1) {
        const double resid = std::max(0.0, saa[c] - 2 * ratio * sab[c] + ratio * ratio * sbb);
        const double var = resid / (s - 1);
        const double se_ratio = std::sqrt(var / s) / (sb / s);
        e.std_error = se_ratio / ratio;
      }
    }
    out[candidates[c]] = e;
  }
  return out;
}

void attach_unigram(SurprisalTable& table, const std::map<std::string, UnigramEntry>& unigram) {
  for (auto& r : table.rows) {
    if (r.eos) continue;
    auto it = unigram.find(r.unit);
    if (it != unigram.end() && it->second.surprisal) {
      r.unigram = it->second.surprisal;
      r.unigram_unscorable = false;
    } else {
      r.unigram.reset();
      r.unigram_unscorable = true;
    }
  }
}

RoiSurprisal roi_surprisal(const SurprisalTable& table, const Roi& roi) {
  const auto rows = table.trial_rows(roi.trial);
  std::size_t units = 0;
  for (const auto* r : rows) units += !r->eos;
  if (rows.empty()) fail(ErrorCode::kSpanOutOfRange, "no trial '" + roi.trial + "'");
  if (roi.begin < 1 || roi.begin >= roi.end || roi.end > units + 1) {
    fail(ErrorCode::kSpanOutOfRange, "span [" + std::to_string(roi.begin) + ", " +
                                         std::to_string(roi.end) + ") outside 1.." +
                                         std::to_string(units + 1));
  }
  RoiSurprisal out;
  for (const auto* r : rows) {
    if (!r->eos && r->position >= roi.begin && r->position < roi.end) out.value += r->surprisal;
  }
  return out;
}

void write_surprisal_tsv(std::ostream& out, const SurprisalTable& table,
                         const std::vector<std::string>& header) {
  write_header_comments(out, header);
  for (std::size_t i = 0; i < kSurprisalColumns.size(); ++i) {
    out << (i ? "\t" : "") << kSurprisalColumns[i];
  }
  out << '\n';
  for (const auto& r : table.rows) {
    out << tsv_escape(r.trial) << '\t' << r.position << '\t' << tsv_escape(r.unit) << '\t'
        << r.length << '\t' << format_number(r.surprisal) << '\t' << format_number(r.unigram)
        << '\t' << r.flags() << '\n';
  }
}

SurprisalTable read_surprisal_tsv(std::istream& in) {
  SurprisalTable t;
  TsvReader reader(in, kSurprisalColumns, "surprisal table");
  std::vector<std::string> f;
  while (reader.next(f)) {
    SurprisalRecord r;
    r.trial = tsv_unescape(f[0]);
    r.position = static_cast<std::size_t>(parse_number(f[1], "position"));
    r.unit = tsv_unescape(f[2]);
    r.length = static_cast<std::size_t>(parse_number(f[3], "length"));
    r.surprisal = parse_number(f[4], "surprisal");
    r.unigram = parse_optional_number(f[5], "unigram_surprisal");
    r.eos = f[6].find("eos") != std::string::npos;
    r.unigram_unscorable = f[6].find("unigram_unscorable") != std::string::npos;
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_unigram_tsv(std::ostream& out, const std::map<std::string, UnigramEntry>& unigram,
                       const std::vector<std::string>& header) {
  write_header_comments(out, header);
  out << "unit\tunigram_surprisal\tn_contexts\n";
  for (const auto& [u, e] : unigram) {
    out << tsv_escape(u) << '\t' << format_number(e.surprisal) << '\t' << e.n_contexts << '\n';
  }
}

std::map<std::string, UnigramEntry> read_unigram_tsv(std::istream& in) {
  std::map<std::string, UnigramEntry> out;
  TsvReader reader(in, kUnigramColumns, "unigram table");
  std::vector<std::string> f;
  while (reader.next(f)) {
    UnigramEntry e;
    e.surprisal = parse_optional_number(f[1], "unigram_surprisal");
    e.n_contexts = static_cast<std::size_t>(parse_number(f[2], "n_contexts"));
    out[tsv_unescape(f[0])] = e;
  }
  return out;
}

}  // namespace unitsurp
