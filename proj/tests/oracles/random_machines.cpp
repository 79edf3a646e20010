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

#include "oracles/random_machines.hpp"

#include <algorithm>
#include <string>

namespace oracle {

using namespace unitsurp;

AlphabetPtr letters(int n, bool with_sep) {
  Alphabet a;
  for (int i = 0; i < n; ++i) a.add(std::string(1, static_cast<char>('a' + i)));
  if (with_sep) a.add_sep();
  return make_alphabet(std::move(a));
}

Transducer random_transducer(Rng& rng, AlphabetPtr in, AlphabetPtr out, int max_states,
                             double eps_prob, int max_out) {
  const int n = 1 + static_cast<int>(rng.below(max_states));
  TransducerBuilder b(in, out);
  b.ensure_states(n);
  b.add_initial(0);
  auto random_out = [&](int max_len) {
    SymbolString s;
    const int len = static_cast<int>(rng.below(max_len + 1));
    for (int i = 0; i < len; ++i) s.push_back(static_cast<Symbol>(rng.below(out->size())));
    return s;
  };
  for (int q = 0; q < n; ++q) {
    const int arcs = 1 + static_cast<int>(rng.below(2 * in->size()));
    for (int k = 0; k < arcs; ++k) {
      if (rng.uniform() < eps_prob && q + 1 < n) {
        const int dst = q + 1 + static_cast<int>(rng.below(n - q - 1));
        b.add_arc(q, kEpsilon, random_out(max_out), dst);
      } else {
        b.add_arc(q, static_cast<Symbol>(rng.below(in->size())), random_out(max_out),
                  static_cast<StateId>(rng.below(n)));
      }
    }
    if (rng.uniform() < 0.5 || q == n - 1) b.set_final(q, random_out(std::min(1, max_out)));
  }
  return std::move(b).build();
}

Transducer random_sequential(Rng& rng, AlphabetPtr in, AlphabetPtr out, int max_states,
                             double arc_prob, int max_out) {
  const int n = 1 + static_cast<int>(rng.below(max_states));
  TransducerBuilder b(in, out);
  b.ensure_states(n);
  b.add_initial(0);
  auto random_out = [&](int max_len) {
    SymbolString s;
    const int len = static_cast<int>(rng.below(max_len + 1));
    for (int i = 0; i < len; ++i) s.push_back(static_cast<Symbol>(rng.below(out->size())));
    return s;
  };
  for (int q = 0; q < n; ++q) {
    for (Symbol x = 0; x < static_cast<Symbol>(in->size()); ++x) {
      if (rng.uniform() < arc_prob) {
        b.add_arc(q, x, random_out(max_out), static_cast<StateId>(rng.below(n)));
      }
    }
    if (rng.uniform() < 0.6 || q == n - 1) b.set_final(q, random_out(std::min(1, max_out)));
  }
  return std::move(b).build();
}

}  // namespace oracle
