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

#include <string>
#include <string_view>
#include <vector>

#include "unitsurp/fst/transducer.hpp"

namespace unitsurp {

// pattern -> replacement / left __ right
//
// The replacement is a template: `$0` stands for the matched text, `<sep>`
// for SEP, anything else is literal. Contexts are tested on the rule's input,
// `^` and `$` anchor them to the ends of the string.
struct RewriteRule {
  std::string pattern;
  std::string replacement;
  std::string left;
  std::string right;

  bool operator==(const RewriteRule&) const = default;
};

// Throws RuleCompileError on a malformed line.
RewriteRule parse_rule(std::string_view line);
// One rule per line; blank lines and lines starting with '#' are skipped.
std::vector<RewriteRule> parse_rules(std::string_view text);
std::string format_rule(const RewriteRule& rule);

// Obligatory rewrite: scanning left to right, at each position the longest
// nonempty match whose contexts hold is replaced and scanning resumes after
// it; other symbols are copied. The result is functional and usually
// nondeterministic on input (matches are guessed and verified).
Transducer compile_rule(const RewriteRule& rule, AlphabetPtr in, AlphabetPtr out);

// Rules applied one after another. The first reads `in`, later ones read
// `out`. An empty list gives the identity.
Transducer compose_rules(const std::vector<RewriteRule>& rules, AlphabetPtr in,
                         AlphabetPtr out);

// Comma/colon split unless a digit follows, sentence-final period, English
// contractions, double quotes, brackets and a few free-standing symbols.
const std::vector<RewriteRule>& default_rules();
std::string_view default_rules_text();

}  // namespace unitsurp
