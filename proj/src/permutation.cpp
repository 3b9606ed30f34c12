#include "canonforge/permutation.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>

namespace canonforge {

namespace {

bool is_bijection(std::span<const std::uint32_t> images) {
  std::vector<bool> seen(images.size(), false);
  for (std::uint32_t img : images) {
    if (img >= images.size() || seen[img]) return false;
    seen[img] = true;
  }
  return true;
}

}  // namespace

void Permutation::set_prefix(UsetId uset, std::vector<std::uint32_t> images) {
  // Identity tables are dropped so is_identity() stays meaningful.
  bool identity = true;
  for (std::uint32_t i = 0; i < images.size(); ++i)
    if (images[i] != i) {
      identity = false;
      break;
    }
  auto pos = std::lower_bound(maps_.begin(), maps_.end(), uset,
                              [](const auto& entry, UsetId id) { return entry.first < id; });
  if (pos != maps_.end() && pos->first == uset) {
    if (identity)
      maps_.erase(pos);
    else
      pos->second = std::move(images);
  } else if (!identity) {
    maps_.insert(pos, {uset, std::move(images)});
  }
}

Permutation Permutation::from_prefix(UsetId uset, std::vector<std::uint32_t> images) {
  if (!is_bijection(images))
    throw std::invalid_argument("permutation images are not a bijection of the prefix");
  Permutation p;
  p.set_prefix(uset, std::move(images));
  return p;
}

Permutation Permutation::transposition(Atom a, Atom b) {
  if (a.uset != b.uset)
    throw std::invalid_argument("transposition of atoms from different usets");
  std::vector<std::uint32_t> images(std::max(a.index, b.index) + 1);
  std::iota(images.begin(), images.end(), 0);
  std::swap(images[a.index], images[b.index]);
  Permutation p;
  p.set_prefix(a.uset, std::move(images));
  return p;
}

Permutation Permutation::from_pairs(
    UsetId uset, std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::uint32_t size = 0;
  for (auto [src, dst] : pairs) size = std::max({size, src + 1, dst + 1});
  constexpr std::uint32_t kUnset = ~0u;
  std::vector<std::uint32_t> images(size, kUnset);
  std::vector<bool> taken(size, false);
  for (auto [src, dst] : pairs) {
    if (images[src] != kUnset || taken[dst])
      throw std::invalid_argument("pairs do not describe an injection");
    images[src] = dst;
    taken[dst] = true;
  }
  // Unused sources meet unused targets in ascending order.
  std::uint32_t next_free = 0;
  for (std::uint32_t src = 0; src < size; ++src) {
    if (images[src] != kUnset) continue;
    while (taken[next_free]) ++next_free;
    images[src] = next_free;
    taken[next_free] = true;
  }
  Permutation p;
  p.set_prefix(uset, std::move(images));
  return p;
}

std::uint32_t Permutation::image(UsetId uset, std::uint32_t index) const {
  auto table = prefix(uset);
  return index < table.size() ? table[index] : index;
}

std::span<const std::uint32_t> Permutation::prefix(UsetId uset) const {
  auto pos = std::lower_bound(maps_.begin(), maps_.end(), uset,
                              [](const auto& entry, UsetId id) { return entry.first < id; });
  if (pos == maps_.end() || pos->first != uset) return {};
  return pos->second;
}

Permutation Permutation::after(const Permutation& first) const {
  Permutation out;
  auto merge_uset = [&](UsetId uset) {
    std::uint32_t size = static_cast<std::uint32_t>(
        std::max(prefix(uset).size(), first.prefix(uset).size()));
    std::vector<std::uint32_t> images(size);
    for (std::uint32_t i = 0; i < size; ++i) images[i] = image(uset, first.image(uset, i));
    out.set_prefix(uset, std::move(images));
  };
  for (const auto& [uset, table] : maps_) merge_uset(uset);
  for (const auto& [uset, table] : first.maps_) {
    if (prefix(uset).empty()) merge_uset(uset);
  }
  return out;
}

Permutation Permutation::inverse() const {
  Permutation out;
  for (const auto& [uset, table] : maps_) {
    std::vector<std::uint32_t> inv(table.size());
    for (std::uint32_t i = 0; i < table.size(); ++i) inv[table[i]] = i;
    out.set_prefix(uset, std::move(inv));
  }
  return out;
}

Value apply(const Value& v, const Permutation& p) {
  switch (v.kind()) {
    case Kind::AtomK:
      return Value::atom(p.image(v.as_atom()));
    case Kind::Tuple: {
      ValueList items;
      items.reserve(v.items().size());
      for (const Value& child : v.items()) items.push_back(apply(child, p));
      return Value::tuple(std::move(items));
    }
    case Kind::Set: {
      ValueList items;
      items.reserve(v.items().size());
      for (const Value& child : v.items()) items.push_back(apply(child, p));
      return Value::set(std::move(items));
    }
    case Kind::Map: {
      MapEntries entries;
      entries.reserve(v.entries().size());
      for (const MapEntry& e : v.entries())
        entries.emplace_back(apply(e.first, p), apply(e.second, p));
      return Value::map(std::move(entries));
    }
    default:
      return v;
  }
}

PermView::PermView(const Permutation& p) {
  for (const auto& [uset, table] : p.tables()) add(uset, table);
}

void PermView::add(UsetId uset, std::span<const std::uint32_t> images) {
  entries_.push_back(Entry{uset, images});
}

std::uint32_t PermView::image(UsetId uset, std::uint32_t index) const {
  for (const Entry& e : entries_) {
    if (e.uset == uset) return index < e.images.size() ? e.images[index] : index;
  }
  return index;
}

namespace {

// Index scratch for set/map child sorting: stack storage for the common
// small case, heap beyond.
struct IdxBuf {
  std::array<std::uint32_t, 64> stack;
  std::vector<std::uint32_t> heap;
  std::uint32_t* data;

  explicit IdxBuf(std::size_t n) {
    if (n <= stack.size()) {
      data = stack.data();
    } else {
      heap.resize(n);
      data = heap.data();
    }
    std::iota(data, data + n, 0u);
  }
};

std::uint32_t atom_image(Atom a, const PermView* p) {
  return p ? p->image(a.uset, a.index) : a.index;
}

}  // namespace

std::strong_ordering compare_under(const Value& a, const PermView* pa, const Value& b,
                                   const PermView* pb) {
  if (auto c = static_cast<int>(a.kind()) <=> static_cast<int>(b.kind()); c != 0) return c;
  switch (a.kind()) {
    case Kind::AtomK: {
      Atom aa = a.as_atom(), ab = b.as_atom();
      if (auto c = aa.uset <=> ab.uset; c != 0) return c;
      return atom_image(aa, pa) <=> atom_image(ab, pb);
    }
    case Kind::Tuple: {
      auto xs = a.items(), ys = b.items();
      if (auto c = xs.size() <=> ys.size(); c != 0) return c;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (auto c = compare_under(xs[i], pa, ys[i], pb); c != 0) return c;
      }
      return std::strong_ordering::equal;
    }
    case Kind::Set: {
      auto xs = a.items(), ys = b.items();
      if (auto c = xs.size() <=> ys.size(); c != 0) return c;
      // Permuting can reorder set members; compare through index sorts
      // under the respective permutations. Identity sides are already
      // sorted by representation.
      IdxBuf ia(xs.size()), ib(ys.size());
      auto sort_side = [](std::uint32_t* idx, std::span<const Value> vals, const PermView* p) {
        if (!p) return;
        std::sort(idx, idx + vals.size(), [&](std::uint32_t l, std::uint32_t r) {
          return compare_under(vals[l], p, vals[r], p) < 0;
        });
      };
      sort_side(ia.data, xs, pa);
      sort_side(ib.data, ys, pb);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (auto c = compare_under(xs[ia.data[i]], pa, ys[ib.data[i]], pb); c != 0) return c;
      }
      return std::strong_ordering::equal;
    }
    case Kind::Map: {
      auto xs = a.entries(), ys = b.entries();
      if (auto c = xs.size() <=> ys.size(); c != 0) return c;
      // Keys stay distinct under bijections, so sorting by permuted key
      // fully determines the entry order.
      IdxBuf ia(xs.size()), ib(ys.size());
      auto sort_side = [](std::uint32_t* idx, std::span<const MapEntry> es, const PermView* p) {
        if (!p) return;
        std::sort(idx, idx + es.size(), [&](std::uint32_t l, std::uint32_t r) {
          return compare_under(es[l].first, p, es[r].first, p) < 0;
        });
      };
      sort_side(ia.data, xs, pa);
      sort_side(ib.data, ys, pb);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const MapEntry& ea = xs[ia.data[i]];
        const MapEntry& eb = ys[ib.data[i]];
        if (auto c = compare_under(ea.first, pa, eb.first, pb); c != 0) return c;
        if (auto c = compare_under(ea.second, pa, eb.second, pb); c != 0) return c;
      }
      return std::strong_ordering::equal;
    }
    default:
      return Value::compare(a, b);
  }
}

PrefixOdometer::PrefixOdometer(std::span<const std::pair<UsetId, std::uint32_t>> counts) {
  for (auto [uset, count] : counts) {
    if (count < 2) continue;  // only one arrangement, nothing to cycle
    Entry e;
    e.uset = uset;
    e.table.resize(count);
    std::iota(e.table.begin(), e.table.end(), 0u);
    entries_.push_back(std::move(e));
  }
}

bool PrefixOdometer::advance() {
  for (std::size_t i = entries_.size(); i-- > 0;) {
    if (std::next_permutation(entries_[i].table.begin(), entries_[i].table.end())) return true;
    // Wrapped back to identity; carry into the previous uset.
  }
  return false;
}

PermView PrefixOdometer::view() const {
  PermView v;
  for (const Entry& e : entries_) v.add(e.uset, e.table);
  return v;
}

Permutation PrefixOdometer::current() const {
  Permutation p;
  for (const Entry& e : entries_) p = p.after(Permutation::from_prefix(e.uset, e.table));
  return p;
}

namespace {

// Per-uset used index lists of a value, ascending.
std::vector<std::pair<UsetId, std::vector<std::uint32_t>>> group_atoms(const Value& v) {
  std::vector<std::pair<UsetId, std::vector<std::uint32_t>>> groups;
  for (Atom a : atoms_of(v)) {
    if (groups.empty() || groups.back().first != a.uset) groups.push_back({a.uset, {}});
    groups.back().second.push_back(a.index);
  }
  return groups;
}

}  // namespace

bool is_isomorphic(const Value& a, const Value& b) {
  auto ga = group_atoms(a), gb = group_atoms(b);
  if (ga.size() != gb.size()) return false;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    if (ga[i].first != gb[i].first || ga[i].second.size() != gb[i].second.size()) return false;
  }
  if (ga.empty()) return a == b;

  // Enumerate, per uset, all bijections of a's used indices onto b's, and
  // test the combined permutation. Any isomorphism restricts to such a
  // bijection, so this search is exhaustive.
  std::vector<std::vector<std::uint32_t>> targets(ga.size());
  for (std::size_t i = 0; i < ga.size(); ++i) targets[i] = gb[i].second;

  auto build = [&]() {
    Permutation p;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
      pairs.reserve(ga[i].second.size());
      for (std::size_t j = 0; j < ga[i].second.size(); ++j)
        pairs.emplace_back(ga[i].second[j], targets[i][j]);
      p = p.after(Permutation::from_pairs(ga[i].first, pairs));
    }
    return p;
  };

  while (true) {
    if (apply(a, build()) == b) return true;
    // Odometer over per-uset target orderings, last uset fastest.
    std::size_t i = ga.size();
    while (i-- > 0) {
      if (std::next_permutation(targets[i].begin(), targets[i].end())) break;
      if (i == 0) return false;
    }
  }
}

Value canonical_form(const Value& v) {
  auto groups = group_atoms(v);
  if (groups.empty()) return v;

  // Compress the used indices of every uset onto the prefix 0..k-1; the
  // least class member never wastes an index (swapping a gap away only
  // makes values smaller), so it lives among the prefix images.
  Permutation compress;
  std::vector<std::pair<UsetId, std::uint32_t>> counts;
  for (const auto& [uset, indices] : groups) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::uint32_t rank = 0; rank < indices.size(); ++rank)
      pairs.emplace_back(indices[rank], rank);
    compress = compress.after(Permutation::from_pairs(uset, pairs));
    counts.emplace_back(uset, static_cast<std::uint32_t>(indices.size()));
  }
  Value best = apply(v, compress);

  // Steepest-descent over prefix permutations: whenever some image is
  // smaller, move there and rescan. The prefix permutations form a group,
  // so a value none of them improves is the least class member, and each
  // move strictly decreases within a finite class, so this terminates.
  PrefixOdometer odo(counts);
  while (odo.advance()) {
    PermView view = odo.view();
    if (compare_under(best, &view, best, nullptr) < 0) {
      best = apply(best, odo.current());
      odo = PrefixOdometer(counts);
    }
  }
  return best;
}

}  // namespace canonforge
