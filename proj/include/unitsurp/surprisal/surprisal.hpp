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
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "unitsurp/lm/model.hpp"
#include "unitsurp/transduce/scorer.hpp"
#include "unitsurp/units/inventory.hpp"

namespace unitsurp {

// -log p(u | context) in nats: the drop in prefix mass from h(context) to
// h(context) h(u). ZeroPrefixMass when the context itself has no mass.
double unit_surprisal(PrefixScorer& scorer, const UnitString& context, const Unit& u);

struct SurprisalRecord {
  std::string trial;
  std::size_t position = 0;  // from 1; the EOS row is units + 1
  std::string unit;
  std::size_t length = 0;  // characters in the unit's spelling
  double surprisal = 0.0;
  std::optional<double> unigram;
  bool eos = false;
  bool unigram_unscorable = false;

  std::string flags() const;
};

struct SurprisalTable {
  std::vector<SurprisalRecord> rows;

  // Rows of one trial in position order, EOS included.
  std::vector<const SurprisalRecord*> trial_rows(const std::string& trial) const;
};

struct Trial {
  std::string id;
  SymbolString source;  // over the model alphabet
};

struct ScoreOptions {
  BeamConfig beam;
  unsigned jobs = 1;
};

// Scores every unit of every trial plus an EOS row, one scorer per trial.
// Errors carry the trial id.
SurprisalTable score_corpus(const LmPtr& lm, const UnitParser& parser,
                            const std::vector<Trial>& trials, const ScoreOptions& options);

struct UnigramEntry {
  std::optional<double> surprisal;  // missing when unscorable
  std::size_t n_contexts = 0;       // positions where the unit had mass
  double std_error = 0.0;           // delta-method error of the estimate, nats
};

struct UnigramOptions {
  std::size_t samples = 1000;
  std::size_t max_len = 50;
  std::uint64_t seed = 0;
  BeamConfig beam;
  unsigned jobs = 1;
};

// Monte-Carlo unigram surprisal: p(u | u_<t) averaged over every unit position
// of every sampled string. Candidates are unit spellings.
std::map<std::string, UnigramEntry> unigram_estimate(const LmPtr& lm, const UnitParser& parser,
                                                     const std::vector<std::string>& candidates,
                                                     const UnigramOptions& options);

// Fills unigram columns from an estimate; units without a scorable estimate
// get the unscorable flag.
void attach_unigram(SurprisalTable& table, const std::map<std::string, UnigramEntry>& unigram);

struct Roi {
  std::string trial;
  std::size_t begin = 1;  // unit positions, half open
  std::size_t end = 2;
};

struct RoiSurprisal {
  double value = 0.0;
  // Summing per-unit values leaves out the SEP/EOS mass that scoring the
  // region as one unit would include.
  bool omits_boundary_mass = true;
};

// SpanOutOfRange unless 1 <= begin < end <= units + 1.
RoiSurprisal roi_surprisal(const SurprisalTable& table, const Roi& roi);

void write_surprisal_tsv(std::ostream& out, const SurprisalTable& table,
                         const std::vector<std::string>& header = {});
SurprisalTable read_surprisal_tsv(std::istream& in);

void write_unigram_tsv(std::ostream& out, const std::map<std::string, UnigramEntry>& unigram,
                       const std::vector<std::string>& header = {});
std::map<std::string, UnigramEntry> read_unigram_tsv(std::istream& in);

}  // namespace unitsurp
