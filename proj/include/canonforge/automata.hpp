#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "canonforge/domain.hpp"
#include "canonforge/uset.hpp"
#include "canonforge/value.hpp"

namespace canonforge {

/// Level-by-level search. goal is evaluated on every node of a level (the
/// initial node counts as depth 0) and the first non-null answer wins;
/// not_found_value is returned once the level at max_depth has been checked
/// or no unseen node remains. Nodes already seen are not revisited — their
/// first appearance is their shallowest depth, so this only saves work.
template <typename Node, typename Result = std::int64_t>
struct BfsProblem {
  Node initial{};
  std::function<std::vector<Node>(const Node&, std::uint64_t)> step;
  std::function<std::optional<Result>(const Node&, std::uint64_t)> goal;
  std::uint64_t max_depth = 0;
  Result not_found_value{};
};

template <typename Node, typename Result>
Result bfs(const BfsProblem<Node, Result>& p) {
  std::set<Node> visited{p.initial};
  std::vector<Node> frontier{p.initial};
  for (std::uint64_t depth = 0;; ++depth) {
    for (const Node& node : frontier)
      if (auto hit = p.goal(node, depth)) return *hit;
    if (depth == p.max_depth) return p.not_found_value;
    std::vector<Node> next_level;
    for (const Node& node : frontier)
      for (Node& succ : p.step(node, depth))
        if (visited.insert(succ).second) next_level.push_back(std::move(succ));
    if (next_level.empty()) return p.not_found_value;
    frontier = std::move(next_level);
  }
}

/// Deterministic automaton as a flat transition table:
/// next[state * n_symbols + symbol] is the successor state.
struct AutomatonTable {
  std::uint32_t n_states = 0;
  std::uint32_t n_symbols = 0;
  std::vector<std::uint32_t> next;

  /// Parses a map value from (state atom, symbol atom) pairs to state atoms
  /// — the shape of a mappings((states x alphabet) -> states) element.
  /// Throws EngineError unless the map is total on states x alphabet.
  static AutomatonTable from_value(const Uset& states, const Uset& alphabet,
                                   const Value& delta);
};

/// Minimal reset-word length of the automaton, or 0 when no word
/// synchronizes it. Breadth-first search on subsets of states starting from
/// the full set; one step applies each symbol to the whole set; the answer
/// is the depth at which a singleton first appears. Depth is capped at
/// (n^3 - n) / 6 steps, which is known to suffice. Note that 0 also covers
/// the single-state automaton: its initial set is already a singleton, so
/// the search answers 0 at depth zero.
std::int64_t check_automaton(const AutomatonTable& a);

/// The transition tables of all automata on n states over k symbols, with
/// both state names and symbol names freely relabelable:
/// mappings((states x alphabet) -> states).
struct AutomatonFamily {
  Uset states;
  Uset alphabet;
  Domain tables;
};

AutomatonFamily automaton_family(std::uint32_t n_states,
                                 std::uint32_t n_symbols);

/// check_automaton on a table value drawn from family.tables.
std::int64_t check_table_value(const AutomatonFamily& family,
                               const Value& delta);

}  // namespace canonforge
