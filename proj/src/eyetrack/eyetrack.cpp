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

#include "unitsurp/eyetrack/eyetrack.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "unitsurp/error.hpp"
#include "unitsurp/io/tsv.hpp"
#include "unitsurp/parallel.hpp"
#include "unitsurp/rng.hpp"

namespace unitsurp {

namespace {

// Bytes a parser may drop between units.
std::set<unsigned char> droppable(const UnitParser& parser) {
  std::set<unsigned char> d(whitespace_bytes().begin(), whitespace_bytes().end());
  for (const auto& delim : parser.spec().delimiters) {
    for (unsigned char c : delim) d.insert(c);
  }
  return d;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

const std::vector<std::string> kReadingColumns = {
    "participant",     "trial",           "position",        "unit",
    "length",          "first_fixation",  "gaze_duration",   "total_reading_time",
    "surprisal",       "unigram_surprisal", "length_prev1",  "length_prev2",
    "surprisal_prev1", "surprisal_prev2", "unigram_prev1",   "unigram_prev2"};

const char* kFixationHeader = "participant,trial,ordinal,char_offset,duration_ms";

}  // namespace

std::vector<CharSpan> char_spans(const UnitParser& parser, std::string_view text) {
  const auto units = parser.segment_text(text);
  const auto skip = droppable(parser);
  // Byte offset where each unit's spelling starts.
  std::vector<std::size_t> starts;
  std::size_t pos = 0;
  for (const auto& u : units) {
    while (text.compare(pos, u.size(), u) != 0) {
      if (pos >= text.size() || !skip.count(static_cast<unsigned char>(text[pos]))) {
        fail(ErrorCode::kAlignmentMismatch, "unit '" + u + "' does not occur in the text");
      }
      ++pos;
    }
    starts.push_back(pos);
    pos += u.size();
  }
  for (; pos < text.size(); ++pos) {
    if (!skip.count(static_cast<unsigned char>(text[pos]))) {
      fail(ErrorCode::kAlignmentMismatch, "text left over after the last unit");
    }
  }
  const auto idx = utf8_char_index(text);
  std::vector<CharSpan> spans;
  for (std::size_t k = 0; k < units.size(); ++k) {
    const std::size_t b = k == 0 ? 0 : starts[k];
    const std::size_t e = k + 1 == units.size() ? text.size() : starts[k + 1];
    spans.push_back({units[k], idx[b], idx[e]});
  }
  return spans;
}

std::size_t span_at(const std::vector<CharSpan>& spans, std::size_t offset) {
  auto it = std::upper_bound(spans.begin(), spans.end(), offset,
                             [](std::size_t o, const CharSpan& s) { return o < s.end; });
  if (it == spans.end()) {
    fail(ErrorCode::kSpanOutOfRange, "character offset " + std::to_string(offset) + " past the text");
  }
  return static_cast<std::size_t>(it - spans.begin());
}

std::vector<UnitMeasures> reading_measures(const std::vector<FixationEvent>& scanpath,
                                           const std::vector<CharSpan>& spans) {
  std::vector<UnitMeasures> m(spans.size());
  std::vector<bool> seen(spans.size(), false);
  std::size_t run = spans.size();  // unit whose first pass is still going
  for (const auto& f : scanpath) {
    const std::size_t u = span_at(spans, f.char_offset);
    m[u].total_reading_time += f.duration_ms;
    if (!seen[u]) {
      seen[u] = true;
      m[u].first_fixation = f.duration_ms;
      m[u].gaze_duration = f.duration_ms;
      run = u;
    } else if (run == u) {
      m[u].gaze_duration += f.duration_ms;
    } else {
      run = spans.size();
    }
  }
  return m;
}

std::vector<MeasureRow> measure_corpus(const UnitParser& parser,
                                       const std::vector<TrialText>& trials,
                                       const std::vector<FixationEvent>& fixations,
                                       unsigned jobs) {
  std::map<std::string, std::size_t> trial_index;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trial_index.emplace(trials[i].id, i).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate trial '" + trials[i].id + "'");
    }
  }
  // Scanpaths in order of first appearance.
  std::map<std::pair<std::string, std::string>, std::size_t> group_of;
  std::vector<std::vector<FixationEvent>> groups;
  for (const auto& f : fixations) {
    auto [it, fresh] = group_of.emplace(std::make_pair(f.participant, f.trial), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(f);
  }
  std::vector<std::vector<CharSpan>> spans(trials.size());
  std::vector<bool> needed(trials.size(), false);
  for (const auto& g : groups) {
    auto it = trial_index.find(g.front().trial);
    if (it == trial_index.end()) fail(ErrorCode::kInvalidArgument, "fixations on unknown trial '" + g.front().trial + "'");
    needed[it->second] = true;
  }
  parallel_for(trials.size(), jobs, [&](std::size_t i) {
    if (!needed[i]) return;
    try {
      spans[i] = char_spans(parser, trials[i].text);
    } catch (const Error& e) {
      throw e.within("trial " + trials[i].id);
    }
  });
  std::vector<std::vector<MeasureRow>> rows(groups.size());
  parallel_for(groups.size(), jobs, [&](std::size_t g) {
    auto& path = groups[g];
    std::stable_sort(path.begin(), path.end(),
                     [](const FixationEvent& a, const FixationEvent& b) { return a.ordinal < b.ordinal; });
    const std::string where = "participant " + path.front().participant + " trial " + path.front().trial;
    for (std::size_t k = 1; k < path.size(); ++k) {
      if (path[k].ordinal == path[k - 1].ordinal) {
        fail(ErrorCode::kInvalidArgument, where + ": repeated ordinal " + std::to_string(path[k].ordinal));
      }
    }
    const auto& sp = spans[trial_index.at(path.front().trial)];
    std::vector<UnitMeasures> m;
    try {
      m = reading_measures(path, sp);
    } catch (const Error& e) {
      throw e.within(where);
    }
    for (std::size_t t = 0; t < sp.size(); ++t) {
      rows[g].push_back({path.front().participant, path.front().trial, t + 1, sp[t].unit, m[t]});
    }
  });
  std::vector<MeasureRow> out;
  for (auto& r : rows) {
    for (auto& x : r) out.push_back(std::move(x));
  }
  return out;
}

ReadingTable build_table(const std::vector<MeasureRow>& measures, const SurprisalTable& surprisal,
                         const TableFilters& filters) {
  std::map<std::pair<std::string, std::size_t>, const SurprisalRecord*> index;
  for (const auto& r : surprisal.rows) {
    if (!r.eos) index[{r.trial, r.position}] = &r;
  }
  auto lookup = [&](const std::string& trial, std::size_t pos) -> const SurprisalRecord* {
    auto it = index.find({trial, pos});
    return it == index.end() ? nullptr : it->second;
  };

  ReadingTable table;
  std::vector<ReadingRow> rows;
  for (const auto& m : measures) {
    const SurprisalRecord* s = lookup(m.trial, m.position);
    if (!s) {
      fail(ErrorCode::kAlignmentMismatch, "no surprisal for trial " + m.trial + " position " +
                                              std::to_string(m.position));
    }
    if (s->unit != m.unit) {
      fail(ErrorCode::kAlignmentMismatch, "trial " + m.trial + " position " + std::to_string(m.position) +
                                              ": measured unit '" + m.unit + "' but scored '" + s->unit + "'");
    }
    ReadingRow r;
    r.participant = m.participant;
    r.trial = m.trial;
    r.position = m.position;
    r.unit = m.unit;
    r.length = s->length;
    r.m = m.m;
    r.surprisal = s->surprisal;
    r.unigram = s->unigram;
    if (const auto* p1 = m.position > 1 ? lookup(m.trial, m.position - 1) : nullptr) {
      r.length_prev1 = static_cast<double>(p1->length);
      r.surprisal_prev1 = p1->surprisal;
      r.unigram_prev1 = p1->unigram;
    }
    if (const auto* p2 = m.position > 2 ? lookup(m.trial, m.position - 2) : nullptr) {
      r.length_prev2 = static_cast<double>(p2->length);
      r.surprisal_prev2 = p2->surprisal;
      r.unigram_prev2 = p2->unigram;
    }
    rows.push_back(std::move(r));
  }
  table.stages.push_back({"total", rows.size()});

  auto keep = [&](const char* stage, bool on, auto pred) {
    if (on) std::erase_if(rows, [&](const ReadingRow& r) { return !pred(r); });
    table.stages.push_back({stage, rows.size()});
  };
  keep("fixated", filters.drop_unfixated, [](const ReadingRow& r) { return r.m.total_reading_time > 0; });
  keep("lagged", filters.drop_unlagged, [](const ReadingRow& r) { return r.position > 2; });
  keep("unigram", filters.require_unigram, [](const ReadingRow& r) {
    return r.unigram && (r.position <= 1 || r.unigram_prev1) && (r.position <= 2 || r.unigram_prev2);
  });
  keep("nonzero_surprisal", filters.drop_zero_surprisal,
       [&](const ReadingRow& r) { return r.surprisal > filters.zero_surprisal_tol; });
  table.rows = std::move(rows);
  return table;
}

std::vector<FixationEvent> read_fixations_csv(std::istream& in) {
  std::vector<FixationEvent> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "fixations line " + std::to_string(lineno);
    if (!header) {
      if (line != kFixationHeader) fail(ErrorCode::kParseError, where + ": expected header '" + kFixationHeader + "'");
      header = true;
      continue;
    }
    const auto f = split_commas(line);
    if (f.size() != 5) fail(ErrorCode::kParseError, where + ": expected 5 fields");
    FixationEvent e;
    e.participant = f[0];
    e.trial = f[1];
    const double ord = parse_number(f[2], "ordinal");
    const double off = parse_number(f[3], "char_offset");
    if (ord != std::floor(ord) || off < 0 || off != std::floor(off)) {
      fail(ErrorCode::kParseError, where + ": ordinal and char_offset must be integers");
    }
    e.ordinal = static_cast<std::int64_t>(ord);
    e.char_offset = static_cast<std::size_t>(off);
    e.duration_ms = parse_number(f[4], "duration_ms");
    if (!(e.duration_ms > 0) || !std::isfinite(e.duration_ms)) {
      fail(ErrorCode::kNonPositiveMeasure, where + ": duration must be positive");
    }
    out.push_back(std::move(e));
  }
  if (!header) fail(ErrorCode::kParseError, "fixations: missing header");
  return out;
}

void write_fixations_csv(std::ostream& out, const std::vector<FixationEvent>& fixations) {
  out << kFixationHeader << '\n';
  for (const auto& f : fixations) {
    out << f.participant << ',' << f.trial << ',' << f.ordinal << ',' << f.char_offset << ','
        << format_number(f.duration_ms) << '\n';
  }
}

void write_reading_tsv(std::ostream& out, const ReadingTable& table,
                       const std::vector<std::string>& header) {
  write_header_comments(out, header);
  for (std::size_t i = 0; i < kReadingColumns.size(); ++i) out << (i ? "\t" : "") << kReadingColumns[i];
  out << '\n';
  for (const auto& r : table.rows) {
    out << tsv_escape(r.participant) << '\t' << tsv_escape(r.trial) << '\t' << r.position << '\t'
        << tsv_escape(r.unit) << '\t' << r.length << '\t' << format_number(r.m.first_fixation) << '\t'
        << format_number(r.m.gaze_duration) << '\t' << format_number(r.m.total_reading_time) << '\t'
        << format_number(r.surprisal) << '\t' << format_number(r.unigram) << '\t'
        << format_number(r.length_prev1) << '\t' << format_number(r.length_prev2) << '\t'
        << format_number(r.surprisal_prev1) << '\t' << format_number(r.surprisal_prev2) << '\t'
        << format_number(r.unigram_prev1) << '\t' << format_number(r.unigram_prev2) << '\n';
  }
}

ReadingTable read_reading_tsv(std::istream& in) {
  ReadingTable t;
  TsvReader reader(in, kReadingColumns, "reading table");
  std::vector<std::string> f;
  while (reader.next(f)) {
    ReadingRow r;
    r.participant = tsv_unescape(f[0]);
    r.trial = tsv_unescape(f[1]);
    r.position = static_cast<std::size_t>(parse_number(f[2], "position"));
    r.unit = tsv_unescape(f[3]);
    r.length = static_cast<std::size_t>(parse_number(f[4], "length"));
    r.m.first_fixation = parse_number(f[5], "first_fixation");
    r.m.gaze_duration = parse_number(f[6], "gaze_duration");
    r.m.total_reading_time = parse_number(f[7], "total_reading_time");
    r.surprisal = parse_number(f[8], "surprisal");
    r.unigram = parse_optional_number(f[9], "unigram_surprisal");
    r.length_prev1 = parse_optional_number(f[10], "length_prev1");
    r.length_prev2 = parse_optional_number(f[11], "length_prev2");
    r.surprisal_prev1 = parse_optional_number(f[12], "surprisal_prev1");
    r.surprisal_prev2 = parse_optional_number(f[13], "surprisal_prev2");
    r.unigram_prev1 = parse_optional_number(f[14], "unigram_prev1");
    r.unigram_prev2 = parse_optional_number(f[15], "unigram_prev2");
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_stage_tsv(std::ostream& out, const std::vector<StageCount>& stages) {
  out << "stage\trows\n";
  for (const auto& s : stages) out << s.stage << '\t' << s.rows << '\n';
}

std::vector<TrialText> read_trials_tsv(std::istream& in) {
  std::vector<TrialText> out;
  TsvReader reader(in, {"trial", "text"}, "trials");
  std::vector<std::string> f;
  while (reader.next(f)) out.push_back({tsv_unescape(f[0]), tsv_unescape(f[1])});
  return out;
}

void write_trials_tsv(std::ostream& out, const std::vector<TrialText>& trials) {
  out << "trial\ttext\n";
  for (const auto& t : trials) out << tsv_escape(t.id) << '\t' << tsv_escape(t.text) << '\n';
}

std::vector<FixationEvent> generate_fixations(const UnitParser& parser,
                                              const std::vector<TrialText>& trials,
                                              const SurprisalTable& surprisal,
                                              const FixationGenOptions& o) {
  std::map<std::pair<std::string, std::size_t>, double> s_of;
  for (const auto& r : surprisal.rows) {
    if (!r.eos) s_of[{r.trial, r.position}] = r.surprisal;
  }
  std::vector<std::vector<CharSpan>> spans;
  for (const auto& t : trials) spans.push_back(char_spans(parser, t.text));

  std::vector<FixationEvent> out;
  const int width = o.participants < 10 ? 1 : static_cast<int>(std::log10(o.participants - 1)) + 1;
  for (std::size_t p = 0; p < o.participants; ++p) {
    Rng rng(derive_seed(o.seed, p));
    std::string pid = std::to_string(p + 1);
    pid = "p" + std::string(width - std::min<std::size_t>(width, pid.size()), '0') + pid;
    const double offset = o.participant_sd * rng.normal();
    for (std::size_t t = 0; t < trials.size(); ++t) {
      std::int64_t ordinal = 0;
      const auto& sp = spans[t];
      auto fixate = [&](std::size_t u) {
        const std::size_t width_u = sp[u].end - sp[u].begin;
        FixationEvent f;
        f.participant = pid;
        f.trial = trials[t].id;
        f.ordinal = ++ordinal;
        f.char_offset = sp[u].begin + (width_u ? rng.below(width_u) : 0);
        auto it = s_of.find({trials[t].id, u + 1});
        const double s = it == s_of.end() ? 0.0 : it->second;
        const double logd = o.base_log_ms + offset + o.surprisal_effect * s +
                            o.length_effect * static_cast<double>(width_u) + o.noise_sd * rng.normal();
        f.duration_ms = std::max(1.0, std::round(std::exp(logd)));
        out.push_back(std::move(f));
      };
      for (std::size_t u = 0; u < sp.size(); ++u) {
        if (sp[u].end == sp[u].begin) continue;
        const bool short_unit = sp[u].end - sp[u].begin <= 3;
        if (rng.uniform() < (short_unit ? o.skip_prob : o.skip_prob / 2)) continue;
        fixate(u);
        if (rng.uniform() < o.refixation_prob) fixate(u);
        if (u > 0 && rng.uniform() < o.regression_prob) {
          fixate(u - 1);
          fixate(u);
        }
      }
    }
  }
  return out;
}

}  // namespace unitsurp
