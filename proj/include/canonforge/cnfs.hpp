#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "canonforge/domain.hpp"
#include "canonforge/permutation.hpp"

namespace canonforge {

/// True iff no uset-respecting permutation yields a strictly smaller value,
/// i.e. v is the least member of its isomorphism class. Values whose atoms
/// contain a gap are rejected immediately (a swap always improves them);
/// otherwise all per-uset permutations of the used prefixes are tried with
/// lazy comparison and early exit.
bool is_canonical(const Value& v);

/// A node of the orderly-generation search tree: a canonical partial value
/// plus its depth and per-uset used-prefix lengths.
struct SearchNode {
  Value partial;
  std::uint32_t depth = 0;
  std::vector<std::pair<UsetId, std::uint32_t>> used_atoms;

  /// Builds the node for a canonical tuple/set/map value.
  static SearchNode from_value(const Value& v);
};

/// One-step extension candidates of `node` drawn from the subdomain `sub`:
/// for every canonical form of sub, all distinct injective per-uset images
/// whose atoms keep the node's used-atom set gap-free. For set nodes only
/// images strictly greater than the current maximum member are returned
/// (the parent function removes the maximum, so sets grow max-last).
/// Tuple and set partials are supported; map partials extend through their
/// key list inside the engine and are rejected here.
std::vector<Value> extensions(const SearchNode& node, const Domain& sub);

struct CnfsOptions {
  /// Disables the flat-key fast path for subsets so the generic tree-walk
  /// runs everywhere (the two are equivalence-tested against each other).
  bool force_generic = false;
};

/// Iterator over the canonical forms of a strict domain: exactly one
/// representative (the least member) per isomorphism class intersecting the
/// domain, via depth-first search over the parent tree expanding only
/// canonical nodes. Throws NonStrictDomainError for non-strict domains.
ValueIterPtr cnfs_iter(const Domain& d, const CnfsOptions& opts = {});

ValueList cnfs_collect(const Domain& d, const CnfsOptions& opts = {});

}  // namespace canonforge
