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

#include "unitsurp/fst/transducer.hpp"

#include <algorithm>
#include <string>

#include "unitsurp/error.hpp"

namespace unitsurp {

std::size_t Transducer::num_arcs() const {
  std::size_t n = 0;
  for (const auto& a : arcs_) n += a.size();
  return n;
}

std::vector<StateId> Transducer::finals() const {
  std::vector<StateId> out;
  for (std::size_t q = 0; q < final_.size(); ++q) {
    if (final_[q]) out.push_back(static_cast<StateId>(q));
  }
  return out;
}

bool Transducer::single_output() const {
  for (const auto& state : arcs_) {
    for (const auto& a : state) {
      if (a.out.size() > 1) return false;
    }
  }
  for (const auto& f : final_) {
    if (f && f->size() > 1) return false;
  }
  return true;
}

bool Transducer::operator==(const Transducer& other) const {
  return *in_ == *other.in_ && *out_ == *other.out_ && arcs_ == other.arcs_ &&
         initials_ == other.initials_ && final_ == other.final_;
}

TransducerBuilder::TransducerBuilder(AlphabetPtr in, AlphabetPtr out)
    : in_(std::move(in)), out_(std::move(out)) {
  if (!in_ || !out_) fail(ErrorCode::kInvalidArgument, "null alphabet");
}

StateId TransducerBuilder::add_state() {
  return static_cast<StateId>(num_states_++);
}

void TransducerBuilder::ensure_states(std::size_t n) {
  num_states_ = std::max(num_states_, n);
}

void TransducerBuilder::add_arc(StateId src, Symbol in, SymbolString out,
                                StateId dst) {
  arcs_.push_back({src, Arc{in, std::move(out), dst}});
}

void TransducerBuilder::set_final(StateId q, SymbolString out) {
  finals_.emplace_back(q, std::move(out));
}

Transducer TransducerBuilder::build() && { return finish(true); }

Transducer TransducerBuilder::build_unchecked_initials() && {
  return finish(false);
}

Transducer TransducerBuilder::finish(bool require_initials) {
  const auto n = static_cast<StateId>(num_states_);
  auto check_state = [&](StateId q) {
    if (q < 0 || q >= n) {
      fail(ErrorCode::kUnknownState, "state " + std::to_string(q));
    }
  };
  auto check_out = [&](const SymbolString& s) {
    for (Symbol x : s) {
      if (!out_->contains(x)) {
        fail(ErrorCode::kUnknownSymbol, "output symbol " + std::to_string(x));
      }
    }
  };
  Transducer t;
  t.in_ = in_;
  t.out_ = out_;
  t.arcs_.resize(num_states_);
  t.final_.resize(num_states_);
  for (auto& p : arcs_) {
    check_state(p.src);
    check_state(p.arc.dst);
    if (p.arc.in != kEpsilon && !in_->contains(p.arc.in)) {
      fail(ErrorCode::kUnknownSymbol, "input symbol " + std::to_string(p.arc.in));
    }
    check_out(p.arc.out);
    t.arcs_[p.src].push_back(std::move(p.arc));
  }
  for (StateId q : initials_) {
    check_state(q);
    if (std::find(t.initials_.begin(), t.initials_.end(), q) == t.initials_.end()) {
      t.initials_.push_back(q);
    }
  }
  if (require_initials && t.initials_.empty()) {
    fail(ErrorCode::kEmptyInitials, "transducer has no initial state");
  }
  for (auto& [q, out] : finals_) {
    check_state(q);
    check_out(out);
    t.final_[q] = std::move(out);
  }
  arcs_.clear();
  return t;
}

Transducer build(std::size_t num_states, const std::vector<ArcSpec>& arcs,
                 const std::vector<StateId>& initials,
                 const std::vector<StateId>& finals, AlphabetPtr in_alpha,
                 AlphabetPtr out_alpha) {
  TransducerBuilder b(std::move(in_alpha), std::move(out_alpha));
  b.ensure_states(num_states);
  for (const auto& a : arcs) b.add_arc(a.src, a.in, a.out, a.dst);
  for (StateId q : initials) b.add_initial(q);
  for (StateId q : finals) b.set_final(q);
  return std::move(b).build();
}

}  // namespace unitsurp
