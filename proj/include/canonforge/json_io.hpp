#pragma once

#include <map>
#include <string>

#include "canonforge/domain.hpp"
#include "canonforge/uset.hpp"
#include "canonforge/value.hpp"
#include "json.hpp"

namespace canonforge {

/// JSON rendering of a value: unit -> null, booleans, integers and text ->
/// their JSON selves, atoms -> {"uset": name, "i": index}, tuples ->
/// arrays, sets -> {"set": [...]}, maps -> {"map": [[key, value], ...]}.
nlohmann::json value_to_json(const Value& v);

/// Usets a spec declared, keyed by name.
using UsetTable = std::map<std::string, Uset>;

/// Inverse of value_to_json; atom usets are resolved by name against the
/// table. Throws EngineError for shapes value_to_json never emits.
Value value_from_json(const nlohmann::json& j, const UsetTable& usets);

struct DomainSpec {
  UsetTable usets;
  Domain domain;
};

/// Builds a domain from a declarative spec:
///
///   {"usets": [{"name": "n", "size": 2}],
///    "domain": {"kind": "subsets", "of":
///                {"kind": "product", "of": [{"kind": "uset", "name": "n"},
///                                           {"kind": "uset", "name": "n"}]}}}
///
/// Kinds: range {n}, boolean, none, uset {name}, values {items},
/// cnf_values {items}, product {of: [...]}, sequences {of, k},
/// subsets {of, k optional}, mappings {keys, values}, join {of: [...]} and
/// filter {of, pred} where pred names a built-in predicate: "distinct"
/// (tuple components pairwise different), "no_loop" (the two components of
/// a pair differ) or "nonempty" (the set or tuple has an element).
DomainSpec domain_from_json(const nlohmann::json& spec);

/// domain_from_json after parsing text; raises EngineError on malformed
/// JSON instead of the parser's own exception.
DomainSpec domain_from_json_text(const std::string& text);

}  // namespace canonforge
