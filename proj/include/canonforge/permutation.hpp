#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "canonforge/value.hpp"

namespace canonforge {

/// Finite permutation of atoms. Per uset it stores the images of the index
/// prefix 0..k-1 and acts as the identity beyond; atoms of usets without an
/// entry are fixed. Always a bijection per uset.
class Permutation {
public:
  Permutation() = default;  // identity

  /// Bijective images of indices 0..images.size()-1 within one uset.
  static Permutation from_prefix(UsetId uset, std::vector<std::uint32_t> images);

  /// Transposition of two atoms of the same uset.
  static Permutation transposition(Atom a, Atom b);

  /// Completes a partial injection (given as source -> target index pairs,
  /// all within `uset`) to a bijection on the smallest covering prefix by
  /// matching the unused sources with the unused targets in ascending
  /// order. Throws std::invalid_argument when the pairs are not injective.
  static Permutation from_pairs(UsetId uset,
                                std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);

  bool is_identity() const { return maps_.empty(); }

  std::uint32_t image(UsetId uset, std::uint32_t index) const;
  Atom image(Atom a) const { return Atom{a.uset, image(a.uset, a.index)}; }

  /// Composition acting as apply(*this) after apply(first).
  Permutation after(const Permutation& first) const;
  Permutation inverse() const;

  /// Prefix image table for one uset (empty if the uset is fixed).
  std::span<const std::uint32_t> prefix(UsetId uset) const;
  std::span<const std::pair<UsetId, std::vector<std::uint32_t>>> tables() const {
    return maps_;
  }

private:
  void set_prefix(UsetId uset, std::vector<std::uint32_t> images);

  // Sorted by uset id; each table is a bijection of 0..size-1.
  std::vector<std::pair<UsetId, std::vector<std::uint32_t>>> maps_;
};

/// Rebuilds `v` with every atom replaced by its image. Sets and maps are
/// re-sorted, so the result is again a well-formed value.
Value apply(const Value& v, const Permutation& p);

/// Borrowed view of per-uset prefix image tables, used on hot paths where
/// the tables are mutated in place between comparisons (e.g. permutation
/// odometers). Lookup is linear in the number of usets, which is tiny.
class PermView {
public:
  PermView() = default;
  explicit PermView(const Permutation& p);

  void add(UsetId uset, std::span<const std::uint32_t> images);
  std::uint32_t image(UsetId uset, std::uint32_t index) const;
  bool empty() const { return entries_.empty(); }

private:
  struct Entry {
    UsetId uset;
    std::span<const std::uint32_t> images;
  };
  std::vector<Entry> entries_;
};

/// Compares apply(a, pa) with apply(b, pb) without materializing either
/// image. Null views mean identity. Set/map children are compared through
/// an index sort under the permuted order, so the result always equals
/// Value::compare on the materialized images.
std::strong_ordering compare_under(const Value& a, const PermView* pa, const Value& b,
                                   const PermView* pb);

/// Odometer over all combinations of per-uset permutations of the index
/// prefixes 0..count-1, in next_permutation order with the last uset
/// cycling fastest. Starts at the identity; advance() steps to the next
/// combination and returns false once every table has wrapped around.
/// view() borrows the current tables, so it is invalidated by advance().
class PrefixOdometer {
public:
  explicit PrefixOdometer(std::span<const std::pair<UsetId, std::uint32_t>> counts);

  bool advance();
  PermView view() const;
  /// Materializes the current combination as a Permutation.
  Permutation current() const;

private:
  struct Entry {
    UsetId uset;
    std::vector<std::uint32_t> table;
  };
  std::vector<Entry> entries_;
};

/// True when some atom permutation maps `a` onto `b`. Only bijections of
/// the atoms actually used are considered, which suffices: any witnessing
/// permutation restricts to one.
bool is_isomorphic(const Value& a, const Value& b);

/// Least member of the isomorphism class of `v`: gap-compresses the used
/// atoms onto index prefixes, then minimizes over all per-uset prefix
/// permutations. Independent of the search engine; quadratic-ish and meant
/// for moderate atom counts.
Value canonical_form(const Value& v);

}  // namespace canonforge
