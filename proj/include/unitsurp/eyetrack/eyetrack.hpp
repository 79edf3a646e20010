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
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "unitsurp/surprisal/surprisal.hpp"
#include "unitsurp/units/inventory.hpp"

namespace unitsurp {

struct FixationEvent {
  std::string participant;
  std::string trial;
  std::int64_t ordinal = 0;
  std::size_t char_offset = 0;  // code points into the trial text
  double duration_ms = 0.0;
};

// A unit and the characters credited to it, [begin, end) in code points.
struct CharSpan {
  std::string unit;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Spans partition the text. Whitespace the parser drops goes to the unit
// before it, or to the first unit when it leads the text. Byte-level parser
// only; NoPath outside its domain.
std::vector<CharSpan> char_spans(const UnitParser& parser, std::string_view text);

// Index of the span containing a character; SpanOutOfRange past the end.
std::size_t span_at(const std::vector<CharSpan>& spans, std::size_t offset);

struct UnitMeasures {
  double first_fixation = 0.0;
  double gaze_duration = 0.0;
  double total_reading_time = 0.0;
};

// One entry per span. Fixations must be one scanpath in ordinal order.
std::vector<UnitMeasures> reading_measures(const std::vector<FixationEvent>& scanpath,
                                           const std::vector<CharSpan>& spans);

struct MeasureRow {
  std::string participant;
  std::string trial;
  std::size_t position = 0;  // from 1
  std::string unit;
  UnitMeasures m;
};

struct TrialText {
  std::string id;
  std::string text;
};

// Groups fixations by (participant, trial) and measures every unit of every
// fixated trial. Unfixated units get zero rows. Fixations on unknown trials
// or past the end of the text are errors.
std::vector<MeasureRow> measure_corpus(const UnitParser& parser,
                                       const std::vector<TrialText>& trials,
                                       const std::vector<FixationEvent>& fixations,
                                       unsigned jobs = 1);

struct ReadingRow {
  std::string participant;
  std::string trial;
  std::size_t position = 0;
  std::string unit;
  std::size_t length = 0;
  UnitMeasures m;
  double surprisal = 0.0;
  std::optional<double> unigram;
  // Predictors of the two preceding units; missing at the trial start.
  std::optional<double> length_prev1, length_prev2;
  std::optional<double> surprisal_prev1, surprisal_prev2;
  std::optional<double> unigram_prev1, unigram_prev2;
};

struct TableFilters {
  bool drop_unfixated = true;
  bool drop_unlagged = true;  // positions 1 and 2
  bool require_unigram = true;  // on the unit and its lags
  bool drop_zero_surprisal = false;  // for the character inventory
  double zero_surprisal_tol = 1e-10;
};

struct StageCount {
  std::string stage;
  std::size_t rows = 0;
};

struct ReadingTable {
  std::vector<ReadingRow> rows;
  std::vector<StageCount> stages;
};

// Joins measures with the surprisal table by (trial, position) and applies
// the filters in order: fixated, lagged, unigram, nonzero surprisal.
// AlignmentMismatch when a unit differs or is missing.
ReadingTable build_table(const std::vector<MeasureRow>& measures, const SurprisalTable& surprisal,
                         const TableFilters& filters);

std::vector<FixationEvent> read_fixations_csv(std::istream& in);
void write_fixations_csv(std::ostream& out, const std::vector<FixationEvent>& fixations);

void write_reading_tsv(std::ostream& out, const ReadingTable& table,
                       const std::vector<std::string>& header = {});
ReadingTable read_reading_tsv(std::istream& in);
void write_stage_tsv(std::ostream& out, const std::vector<StageCount>& stages);

// Trial texts as TSV `trial, text`.
std::vector<TrialText> read_trials_tsv(std::istream& in);
void write_trials_tsv(std::ostream& out, const std::vector<TrialText>& trials);

struct FixationGenOptions {
  std::size_t participants = 10;
  std::uint64_t seed = 0;
  double base_log_ms = 5.3;
  double surprisal_effect = 0.05;  // per nat, on log duration
  double length_effect = 0.02;     // per character
  double participant_sd = 0.15;
  double noise_sd = 0.3;
  double skip_prob = 0.2;
  double refixation_prob = 0.15;
  double regression_prob = 0.1;
};

// Seeded left-to-right scanpaths with skips, refixations and short
// regressions. Durations are log-normal with a planted surprisal slope taken
// from `surprisal` (rows matched by trial and position; missing rows count
// as zero surprisal).
std::vector<FixationEvent> generate_fixations(const UnitParser& parser,
                                              const std::vector<TrialText>& trials,
                                              const SurprisalTable& surprisal,
                                              const FixationGenOptions& options);

}  // namespace unitsurp
