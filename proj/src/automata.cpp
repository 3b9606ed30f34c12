#include "canonforge/automata.hpp"

#include <bit>
#include <string>

#include "canonforge/errors.hpp"

namespace canonforge {

AutomatonTable AutomatonTable::from_value(const Uset& states,
                                          const Uset& alphabet,
                                          const Value& delta) {
  AutomatonTable t;
  t.n_states = states.size();
  t.n_symbols = alphabet.size();
  const std::size_t total = std::size_t{t.n_states} * t.n_symbols;
  if (delta.kind() != Kind::Map)
    throw EngineError("transition table must be a map value, got " +
                      delta.str());
  if (delta.entries().size() != total)
    throw EngineError("transition table must be total on states x alphabet");
  t.next.assign(total, 0);
  std::vector<bool> seen(total, false);
  for (const MapEntry& e : delta.entries()) {
    const Value& key = e.first;
    if (key.kind() != Kind::Tuple || key.items().size() != 2 ||
        key.items()[0].kind() != Kind::AtomK ||
        key.items()[1].kind() != Kind::AtomK || e.second.kind() != Kind::AtomK)
      throw EngineError("transition entry must map (state, symbol) to state, got " +
                        key.str() + " -> " + e.second.str());
    const Atom s = key.items()[0].as_atom();
    const Atom c = key.items()[1].as_atom();
    const Atom target = e.second.as_atom();
    if (s.uset != states.id() || c.uset != alphabet.id() ||
        target.uset != states.id())
      throw EngineError("transition entry uses foreign atoms: " + key.str() +
                        " -> " + e.second.str());
    const std::size_t idx = std::size_t{s.index} * t.n_symbols + c.index;
    if (seen[idx])
      throw EngineError("transition table repeats the pair " + key.str());
    seen[idx] = true;
    t.next[idx] = target.index;
  }
  return t;
}

std::int64_t check_automaton(const AutomatonTable& a) {
  const std::uint32_t n = a.n_states;
  if (n == 0 || a.n_symbols == 0)
    throw EngineError("automaton needs at least one state and one symbol");
  if (n > 64)
    throw EngineError("reset-word search supports at most 64 states");
  if (a.next.size() != std::size_t{n} * a.n_symbols)
    throw EngineError("transition table size does not match states x symbols");
  for (std::uint32_t target : a.next)
    if (target >= n) throw EngineError("transition target out of range");

  const std::uint64_t full = n == 64 ? ~0ull : (1ull << n) - 1;
  BfsProblem<std::uint64_t> p;
  p.initial = full;
  p.max_depth = (std::uint64_t{n} * n * n - n) / 6;
  p.not_found_value = 0;
  p.step = [&a, n](const std::uint64_t& state, std::uint64_t) {
    std::vector<std::uint64_t> out;
    out.reserve(a.n_symbols);
    for (std::uint32_t c = 0; c < a.n_symbols; ++c) {
      std::uint64_t image = 0;
      for (std::uint32_t s = 0; s < n; ++s)
        if (state >> s & 1) image |= 1ull << a.next[std::size_t{s} * a.n_symbols + c];
      out.push_back(image);
    }
    return out;
  };
  p.goal = [](const std::uint64_t& state,
              std::uint64_t depth) -> std::optional<std::int64_t> {
    if (std::popcount(state) == 1) return static_cast<std::int64_t>(depth);
    return std::nullopt;
  };
  return bfs(p);
}

AutomatonFamily automaton_family(std::uint32_t n_states,
                                 std::uint32_t n_symbols) {
  if (n_states == 0 || n_symbols == 0)
    throw EngineError("automata need at least one state and one symbol");
  Uset states(n_states, "q");
  Uset alphabet(n_symbols, "a");
  Domain tables =
      mappings(uset_domain(states) * uset_domain(alphabet), uset_domain(states));
  return AutomatonFamily{states, alphabet, std::move(tables)};
}

std::int64_t check_table_value(const AutomatonFamily& family,
                               const Value& delta) {
  return check_automaton(
      AutomatonTable::from_value(family.states, family.alphabet, delta));
}

}  // namespace canonforge
