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

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unitsurp/fst/transducer.hpp"
#include "unitsurp/lm/model.hpp"
#include "unitsurp/lm/ngram.hpp"

namespace unitsurp {

struct BeamConfig {
  std::size_t beam_k = 5;
  double beam_prune = 0.001;
  double fst_prune = 0.005;
  // Input symbols read between two emitted output symbols.
  std::size_t max_expand_steps = 5;
  double expand_stop_mass = 0.01;
  // Treat continuations from co-universal states as accepted without search.
  bool universal_fast_path = true;

  // Keeps everything. Exploration is still capped at max_expand_steps, which
  // is large; meant for models with bounded string length.
  static BeamConfig no_pruning();

  void validate() const;
  std::string to_json() const;
  static BeamConfig from_json(std::string_view text);
};

// The machine as the scorer walks it: at most one output symbol per arc, no
// epsilon:epsilon arcs, and final outputs turned into arcs that read EOS
// into a dedicated end state. Build once, share between scorers.
class ScoringMachine {
 public:
  // The machine must be unambiguous (each input has at most one accepting
  // path); unit parsers are.
  explicit ScoringMachine(const Transducer& f);

  struct Arc {
    Symbol in;   // kEpsilon, an input symbol, or eos_in()
    Symbol out;  // kEpsilon or an output symbol
    StateId dst;
  };

  const Alphabet& input_alphabet() const { return *in_; }
  const Alphabet& output_alphabet() const { return *out_; }
  Symbol eos_in() const { return static_cast<Symbol>(in_->size()); }
  StateId end_state() const { return end_; }
  const std::vector<StateId>& initials() const { return initials_; }
  const std::vector<Arc>& arcs(StateId q) const { return arcs_[q]; }
  bool co_universal(StateId q) const { return co_universal_[q]; }
  bool universal(StateId q) const { return universal_[q]; }
  std::size_t num_states() const { return arcs_.size(); }
  bool accepts_here(StateId q) const { return accepts_here_[q]; }

 private:
  void share_output_prefixes(std::size_t n);

  AlphabetPtr in_, out_;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<StateId> initials_;
  std::vector<bool> co_universal_, universal_, accepts_here_;
  StateId end_ = 0;
};

// Beam decomposition of the pushforward p_Delta = p_Sigma o f over output
// prefixes. All masses are natural logs. Not thread-safe; use one per worker.
class PrefixScorer {
 public:
  PrefixScorer(LmPtr lm, std::shared_ptr<const ScoringMachine> machine, BeamConfig config);
  PrefixScorer(LmPtr lm, const Transducer& f, BeamConfig config)
      : PrefixScorer(std::move(lm), std::make_shared<const ScoringMachine>(f), config) {}

  const BeamConfig& config() const { return config_; }
  const ScoringMachine& machine() const { return *machine_; }
  // Index of EOS in decompose_next and score_symbol.
  Symbol eos() const { return static_cast<Symbol>(machine_->output_alphabet().size()); }

  // log p(delta as a prefix). BeamExhausted if pruning removed every
  // hypothesis along the way.
  double prefix_mass(const SymbolString& delta);
  // log prefix mass of delta . x, advancing the cache by one symbol.
  double score_symbol(const SymbolString& delta, Symbol x);
  // log p(x | delta) for every output symbol, EOS last.
  std::vector<double> decompose_next(const SymbolString& delta);

  std::size_t cache_size() const { return cache_.size(); }
  void clear_cache();

 private:
  struct Hyp {
    int lm;  // index into lm_states_, or -1 once EOS has been read
    StateId q;
    double mass;  // log prefix probability of the source prefix
  };
  struct Node {
    std::vector<Hyp> hyps;
    double log_mass = 0.0;
    bool lossy = false;
    std::optional<double> eos;
  };
  struct KeyLess {
    const PrefixScorer* self;
    bool operator()(const std::pair<int, StateId>& a, const std::pair<int, StateId>& b) const;
  };
  using Bucket = std::map<std::pair<int, StateId>, double, KeyLess>;
  struct Expansion {
    std::map<Symbol, Bucket> buckets;
    double eos_mass;
    bool dropped = false;
  };

  const Node& node(const SymbolString& delta);
  // relaxed: without fst_prune and the stop mass, for a step that lost
  // everything otherwise.
  Expansion expand(const Node& from, Symbol target, bool relaxed = false);
  Node finish(const Bucket& bucket, bool lossy);
  double hyp_weight(int lm, StateId q, double mass);

  int intern(LmState s);
  int advance(int lm, Symbol x);
  const std::vector<double>& dist(int lm);

  // log probability that the source continues from (lm, subset) into the
  // machine's domain.
  double acceptance(int lm, StateId q);
  // reach: levels the search went down; open: log mass of the continuations
  // the depth bound left undecided (the true value is at most val + open).
  double subset_acceptance(int lm, int subset, std::size_t depth, std::size_t& reach, double& open);
  int subset_id(std::vector<StateId> states);
  int subset_step(int subset, Symbol x);

  LmPtr lm_;
  std::shared_ptr<const ScoringMachine> machine_;
  BeamConfig config_;

  std::deque<LmState> lm_states_;
  std::unordered_map<LmState, int, VectorHash> lm_ids_;
  std::deque<std::vector<double>> dists_;
  std::unordered_map<std::uint64_t, int> lm_next_;

  std::vector<std::vector<StateId>> subsets_;
  std::map<std::vector<StateId>, int> subset_ids_;
  std::vector<bool> subset_co_universal_;
  std::vector<bool> subset_final_;
  std::unordered_map<std::uint64_t, int> subset_next_;
  struct Acceptance {
    double log_p;
    double open;
    std::size_t reach;
  };
  // Searches that ended before the bound, or whose open mass is below
  // rounding, hold for any depth >= reach.
  std::map<std::pair<int, int>, Acceptance> accept_full_;
  std::map<std::tuple<int, int, std::size_t>, Acceptance> accept_memo_;

  std::map<SymbolString, Node> cache_;
};

struct PushforwardResult {
  // Probability (not log) of each output string.
  std::map<SymbolString, double> prob;
  // Mass of sources longer than the bound.
  double truncated_mass = 0.0;
};

// Enumerates every source string up to max_src_len. EnumerationTooLarge
// when |Sigma|^max_src_len exceeds 10^7.
PushforwardResult pushforward_exact(const LanguageModel& lm, const Transducer& f,
                                    std::size_t max_src_len);

}  // namespace unitsurp
