#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "canonforge/permutation.hpp"
#include "canonforge/value.hpp"

namespace testkit {

using namespace canonforge;
using Rng = std::mt19937_64;

inline Value vi(std::int64_t n) { return Value::integer(n); }
inline Value vt(std::string s) { return Value::text(std::move(s)); }
inline Value vb(bool b) { return Value::boolean(b); }
inline Value tup(ValueList items) { return Value::tuple(std::move(items)); }
inline Value set(ValueList items) { return Value::set(std::move(items)); }
inline Value map(MapEntries entries) { return Value::map(std::move(entries)); }

inline std::uint64_t below(Rng& rng, std::uint64_t n) {
  // Unbiased bounded draw by rejection on the top of the range.
  std::uint64_t limit = ~0ull - ~0ull % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Random value tree over the given usets; scalar-only at depth 0.
inline Value random_value(Rng& rng, const std::vector<Uset>& usets, int depth) {
  int max_kind = depth > 0 ? 7 : 4;
  switch (below(rng, static_cast<std::uint64_t>(max_kind) + 1)) {
    case 0:
      return Value::unit();
    case 1:
      return vb(below(rng, 2) == 1);
    case 2:
      return vi(static_cast<std::int64_t>(below(rng, 7)) - 3);
    case 3: {
      static const char* words[] = {"", "a", "b", "ab", "ba"};
      return vt(words[below(rng, 5)]);
    }
    case 4: {
      const Uset& u = usets[below(rng, usets.size())];
      return Value::atom(u, static_cast<std::uint32_t>(below(rng, u.size())));
    }
    case 5: {
      ValueList items;
      for (std::uint64_t i = below(rng, 4); i-- > 0;)
        items.push_back(random_value(rng, usets, depth - 1));
      return tup(std::move(items));
    }
    case 6: {
      ValueList items;
      for (std::uint64_t i = below(rng, 4); i-- > 0;)
        items.push_back(random_value(rng, usets, depth - 1));
      return set(std::move(items));
    }
    default: {
      MapEntries entries;
      for (std::uint64_t i = below(rng, 3); i-- > 0;) {
        Value key = random_value(rng, usets, depth - 1);
        bool dup = false;
        for (const MapEntry& e : entries) dup = dup || e.first == key;
        if (!dup) entries.emplace_back(std::move(key), random_value(rng, usets, depth - 1));
      }
      return map(std::move(entries));
    }
  }
}

/// Random permutation touching the given usets (possibly identity).
inline Permutation random_permutation(Rng& rng, const std::vector<Uset>& usets) {
  Permutation p;
  for (const Uset& u : usets) {
    std::vector<std::uint32_t> images(u.size());
    for (std::uint32_t i = 0; i < u.size(); ++i) images[i] = i;
    for (std::uint32_t i = u.size(); i > 1; --i)
      std::swap(images[i - 1], images[below(rng, i)]);
    p = p.after(Permutation::from_prefix(u.id(), std::move(images)));
  }
  return p;
}

}  // namespace testkit
