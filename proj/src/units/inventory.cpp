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

#include "unitsurp/units/inventory.hpp"

#include <json.hpp>

#include "unitsurp/error.hpp"
#include "unitsurp/fst/operations.hpp"

namespace unitsurp {

using nlohmann::json;

InventoryKind parse_inventory_kind(std::string_view name) {
  if (name == "tokens") return InventoryKind::kTokens;
  if (name == "characters") return InventoryKind::kCharacters;
  if (name == "acontextual") return InventoryKind::kAcontextual;
  if (name == "contextual") return InventoryKind::kContextual;
  fail(ErrorCode::kInvalidArgument, "unknown inventory kind '" + std::string(name) + "'");
}

std::string_view inventory_kind_name(InventoryKind kind) {
  switch (kind) {
    case InventoryKind::kTokens: return "tokens";
    case InventoryKind::kCharacters: return "characters";
    case InventoryKind::kAcontextual: return "acontextual";
    case InventoryKind::kContextual: return "contextual";
  }
  return "tokens";
}

const std::vector<unsigned char>& whitespace_bytes() {
  static const std::vector<unsigned char> ws{' ', '\t', '\n', '\r', '\f', '\v'};
  return ws;
}

void UnitInventorySpec::validate() const {
  if (kind == InventoryKind::kAcontextual) {
    if (delimiters.empty()) fail(ErrorCode::kEmptyDelimiterSet, "acontextual spec without delimiters");
    if (attribution == Attribution::kNone) {
      fail(ErrorCode::kInvalidArgument, "acontextual spec needs leading, trailing or absorb");
    }
  }
  if (kind == InventoryKind::kCharacters && attribution != Attribution::kNone &&
      attribution != Attribution::kAbsorb) {
    fail(ErrorCode::kInvalidArgument, "characters support attribution none or absorb");
  }
  if (kind == InventoryKind::kContextual && rules.empty()) {
    fail(ErrorCode::kInvalidArgument, "contextual spec without rules");
  }
  for (const auto& d : delimiters) {
    if (d.size() != 1) fail(ErrorCode::kInvalidArgument, "delimiters must be single bytes");
  }
}

std::string UnitInventorySpec::name() const {
  switch (kind) {
    case InventoryKind::kAcontextual:
      return "acontextual-" + std::string(attribution_name(attribution));
    case InventoryKind::kCharacters:
      return attribution == Attribution::kAbsorb ? "characters-absorb" : "characters";
    default:
      return std::string(inventory_kind_name(kind));
  }
}

UnitInventorySpec UnitInventorySpec::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("inventory spec: ") + e.what());
  }
  UnitInventorySpec spec;
  try {
    spec.kind = parse_inventory_kind(j.at("kind").get<std::string>());
    if (spec.kind == InventoryKind::kCharacters) spec.attribution = Attribution::kNone;
    if (spec.kind == InventoryKind::kContextual) spec.attribution = Attribution::kAbsorb;
    if (j.contains("delimiters")) {
      spec.delimiters = j["delimiters"].get<std::vector<std::string>>();
    }
    if (j.contains("attribution")) {
      spec.attribution = parse_attribution(j["attribution"].get<std::string>());
    }
    if (j.contains("rules")) {
      const auto& r = j["rules"];
      if (r.is_string()) {
        if (r.get<std::string>() != "default") {
          fail(ErrorCode::kInvalidArgument, "\"rules\" string must be \"default\"");
        }
        spec.rules = default_rules();
      } else {
        for (const auto& item : r) {
          RewriteRule rule;
          rule.pattern = item.at("pattern").get<std::string>();
          rule.replacement = item.value("replacement", std::string("<sep>$0<sep>"));
          rule.left = item.value("left", std::string());
          rule.right = item.value("right", std::string());
          spec.rules.push_back(std::move(rule));
        }
      }
    }
    if (j.contains("rules_text")) {
      auto more = parse_rules(j["rules_text"].get<std::string>());
      spec.rules.insert(spec.rules.end(), more.begin(), more.end());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("inventory spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string UnitInventorySpec::to_json() const {
  json j;
  j["kind"] = inventory_kind_name(kind);
  j["attribution"] = attribution_name(attribution);
  j["delimiters"] = delimiters;
  json rs = json::array();
  for (const auto& r : rules) {
    rs.push_back({{"pattern", r.pattern},
                  {"replacement", r.replacement},
                  {"left", r.left},
                  {"right", r.right}});
  }
  if (!rules.empty()) j["rules"] = rs;
  return j.dump();
}

Transducer build_inventory_fst(const UnitInventorySpec& spec) {
  spec.validate();
  auto bytes = make_alphabet(Alphabet::bytes(false));
  auto out = make_alphabet(Alphabet::bytes(true));
  std::vector<Symbol> delims;
  for (const auto& d : spec.delimiters) delims.push_back(static_cast<unsigned char>(d[0]));
  switch (spec.kind) {
    case InventoryKind::kTokens:
      return tokens_fst(bytes, out);
    case InventoryKind::kCharacters:
      return utf8_char_fst(bytes, out,
                           spec.attribution == Attribution::kAbsorb ? delims
                                                                    : std::vector<Symbol>{});
    case InventoryKind::kAcontextual:
      return delimiter_fst(bytes, out, delims, spec.attribution);
    case InventoryKind::kContextual: {
      Transducer rules = compose_rules(spec.rules, bytes, out);
      std::vector<Symbol> absorb;
      for (unsigned char c : whitespace_bytes()) absorb.push_back(c);
      absorb.push_back(*out->sep());
      return minimize(compose(rules, delimiter_fst(out, out, absorb, Attribution::kAbsorb)));
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown inventory kind");
}

UnitParser UnitParser::compile(const UnitInventorySpec& spec) {
  return UnitParser(spec, std::make_shared<const Transducer>(build_inventory_fst(spec)), false);
}

UnitParser UnitParser::compile_for_tokens(const UnitInventorySpec& spec, AlphabetPtr tokens) {
  if (spec.kind == InventoryKind::kTokens) {
    auto out = make_alphabet(with_sep(*tokens));
    return UnitParser(spec, std::make_shared<const Transducer>(tokens_fst(tokens, out)), true);
  }
  auto bytes = make_alphabet(Alphabet::bytes(false));
  Transducer f = minimize(compose(spelling_fst(tokens, bytes), build_inventory_fst(spec)));
  return UnitParser(spec, std::make_shared<const Transducer>(std::move(f)), false);
}

SymbolString UnitParser::transduce(const SymbolString& sigma) const {
  return apply_fst(*fst_, sigma);
}

UnitString UnitParser::segment(const SymbolString& sigma) const {
  return h_decode(transduce(sigma), sep());
}

std::vector<std::string> UnitParser::segment_text(std::string_view text) const {
  return spell_units(segment(input_alphabet().encode_bytes(text)), output_alphabet());
}

Unit UnitParser::encode_unit(std::string_view spelling) const {
  const auto& out = output_alphabet();
  if (!token_units_) return out.encode_bytes(spelling);
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (out.spelling(static_cast<Symbol>(s)) == spelling && !out.is_sep(static_cast<Symbol>(s))) {
      return {static_cast<Symbol>(s)};
    }
  }
  fail(ErrorCode::kUnknownSymbol, "no unit spelled '" + std::string(spelling) + "'");
}

}  // namespace unitsurp
