#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "canonforge/uset.hpp"

namespace canonforge {

class Value;
using ValueList = std::vector<Value>;
using MapEntry = std::pair<Value, Value>;
using MapEntries = std::vector<MapEntry>;

/// Kind tags in ascending order of the cross-type rank used by compare().
enum class Kind : std::uint8_t {
  Unit = 0,
  Boolean,
  Integer,
  Text,
  AtomK,
  Tuple,
  Set,
  Map,
};

/// Immutable structured value: unit, boolean, integer, text, atom, tuple,
/// set or map. Sets and maps keep their children sorted under the total
/// order, so structural equality coincides with semantic equality and
/// comparison never needs normalization. Copies are cheap (composite
/// kinds share their representation).
class Value {
public:
  Value() : rep_(UnitRep{}) {}  // unit

  static Value unit() { return Value(); }
  static Value boolean(bool b) { return Value(Rep(b)); }
  static Value integer(std::int64_t n) { return Value(Rep(n)); }
  static Value text(std::string s);
  static Value atom(Atom a) { return Value(Rep(a)); }
  static Value atom(const Uset& u, std::uint32_t index) { return atom(u.atom(index)); }
  static Value tuple(ValueList items);
  /// Sorts and deduplicates `items`.
  static Value set(ValueList items);
  /// Sorts entries by key; throws std::invalid_argument on duplicate keys.
  static Value map(MapEntries entries);

  Kind kind() const { return static_cast<Kind>(rep_.index()); }
  bool is(Kind k) const { return kind() == k; }

  bool as_bool() const { return std::get<bool>(rep_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(rep_); }
  const std::string& as_text() const { return *std::get<TextRep>(rep_); }
  Atom as_atom() const { return std::get<Atom>(rep_); }
  /// Tuple or set children (sets: sorted ascending).
  std::span<const Value> items() const;
  /// Map entries, sorted by key.
  std::span<const MapEntry> entries() const;

  friend std::strong_ordering operator<=>(const Value& a, const Value& b) {
    return compare(a, b);
  }
  friend bool operator==(const Value& a, const Value& b) {
    return compare(a, b) == std::strong_ordering::equal;
  }

  /// Total order over all values: unit < booleans < integers < texts <
  /// atoms < tuples < sets < maps. Booleans false < true; integers and
  /// texts naturally; atoms by (uset id, index); tuples shorter first,
  /// then lexicographically; sets smaller first, then lexicographically
  /// over sorted elements; maps likewise over sorted (key, value) pairs.
  static std::strong_ordering compare(const Value& a, const Value& b);

  /// Python-flavoured rendering: None, True, 7, 'txt', a0, (a0, a1),
  /// {a0, a1}, {k: v; k2: v2}. Atoms render as <uset name><index>.
  std::string str() const;

private:
  struct UnitRep {};
  using TextRep = std::shared_ptr<const std::string>;
  struct TupleRep {
    std::shared_ptr<const ValueList> items;
  };
  struct SetRep {
    std::shared_ptr<const ValueList> items;
  };
  struct MapRep {
    std::shared_ptr<const MapEntries> entries;
  };

  // Alternative order mirrors Kind so rep_.index() is the type rank.
  using Rep =
      std::variant<UnitRep, bool, std::int64_t, TextRep, Atom, TupleRep, SetRep, MapRep>;

  explicit Value(Rep rep) : rep_(std::move(rep)) {}

  Rep rep_;
};

/// All atoms occurring anywhere in `v`, sorted ascending, deduplicated.
std::vector<Atom> atoms_of(const Value& v);

/// True when some uset's indices in `sorted_atoms` are not the contiguous
/// prefix 0..k-1 of that uset. Input must be sorted and deduplicated (as
/// produced by atoms_of).
bool has_gap(std::span<const Atom> sorted_atoms);

/// Structural parent for the search-tree ordering: tuples drop their last
/// component, sets and maps drop their greatest element/entry. Values with
/// no parent (atoms, scalars, empty tuple/set/map) yield std::nullopt.
std::optional<Value> parent_of(const Value& v);

inline std::string to_display(const Value& v) { return v.str(); }

}  // namespace canonforge
