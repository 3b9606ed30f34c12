#include "canonforge/cnfs.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "domain_impl.hpp"

namespace canonforge {
namespace {

using u32 = std::uint32_t;
using u64 = std::uint64_t;

// ---------------------------------------------------------------------------
// Atom bookkeeping
// ---------------------------------------------------------------------------

/// Per-uset sorted index sets of the atoms a partial value uses. The search
/// keeps nodes gap-free, but extension bases may temporarily have holes (a
/// mapping key can introduce non-prefix atoms that the value then fills).
struct AtomSets {
  std::vector<std::pair<UsetId, std::vector<u32>>> groups;  // sorted by uset

  const std::vector<u32>* find(UsetId u) const {
    for (const auto& [id, idx] : groups)
      if (id == u) return &idx;
    return nullptr;
  }

  void add(Atom a) {
    auto it = std::lower_bound(groups.begin(), groups.end(), a.uset,
                               [](const auto& g, UsetId u) { return g.first < u; });
    if (it == groups.end() || it->first != a.uset)
      it = groups.insert(it, {a.uset, {}});
    auto& idx = it->second;
    auto pos = std::lower_bound(idx.begin(), idx.end(), a.index);
    if (pos == idx.end() || *pos != a.index) idx.insert(pos, a.index);
  }

  void add_all(const Value& v) {
    for (Atom a : atoms_of(v)) add(a);
  }

  /// Prefix lengths per uset; meaningful once every group is gap-free.
  std::vector<std::pair<UsetId, u32>> counts() const {
    std::vector<std::pair<UsetId, u32>> out;
    out.reserve(groups.size());
    for (const auto& [id, idx] : groups)
      out.emplace_back(id, static_cast<u32>(idx.size()));
    return out;
  }
};

bool is_prefix_set(const std::vector<u32>& idx) {
  return idx.empty() || idx.back() + 1 == idx.size();
}

bool canonical_with_counts(const Value& v,
                           std::span<const std::pair<UsetId, u32>> counts) {
  PrefixOdometer odo(counts);
  while (odo.advance()) {
    PermView view = odo.view();
    if (compare_under(v, &view, v, nullptr) == std::strong_ordering::less)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Extension images
// ---------------------------------------------------------------------------

/// Appends to `out` every distinct injective image of the canonical form `c`
/// whose atoms keep the union with `base` gap-free. Order: usets ascending,
/// per-uset target tuples lexicographic, later usets cycling fastest. Images
/// of distinct canonical forms are never equal (each determines its class),
/// so deduplication within one call is complete deduplication.
void enumerate_images(const Value& c, const AtomSets& base, ValueList& out) {
  struct Group {
    UsetId uset;
    u32 m = 0;       // source prefix length in c
    u32 limit = 0;   // targets drawn from [0, limit)
    const std::vector<u32>* base_idx = nullptr;
  };
  std::vector<Group> groups;
  for (Atom a : atoms_of(c)) {
    if (!groups.empty() && groups.back().uset == a.uset)
      ++groups.back().m;
    else
      groups.push_back({a.uset, 1, 0, nullptr});
  }

  // Base usets the image cannot touch must already be gap-free.
  for (const auto& [id, idx] : base.groups) {
    bool touched = false;
    for (const auto& g : groups) touched = touched || g.uset == id;
    if (!touched && !is_prefix_set(idx)) return;
  }

  std::size_t first = out.size();
  if (groups.empty()) {  // atom-free form: the only image is c itself
    out.push_back(c);
    return;
  }

  for (auto& g : groups) {
    g.base_idx = base.find(g.uset);
    u64 b = g.base_idx ? g.base_idx->size() : 0;
    g.limit = static_cast<u32>(
        std::min<u64>(b + g.m, UsetRegistry::global().size_of(g.uset)));
  }

  std::vector<std::vector<u32>> targets(groups.size());
  std::vector<u32> merged;  // scratch for the gap-free union check

  auto union_is_prefix = [&](const Group& g, const std::vector<u32>& t) {
    merged.clear();
    if (g.base_idx) merged.assign(g.base_idx->begin(), g.base_idx->end());
    merged.insert(merged.end(), t.begin(), t.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    return merged.back() + 1 == merged.size();
  };

  auto emit = [&]() {
    Permutation p;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      std::vector<std::pair<u32, u32>> pairs;
      pairs.reserve(groups[i].m);
      for (u32 j = 0; j < groups[i].m; ++j) pairs.emplace_back(j, targets[i][j]);
      p = Permutation::from_pairs(groups[i].uset, pairs).after(p);
    }
    Value img = apply(c, p);
    if (std::find(out.begin() + first, out.end(), img) == out.end())
      out.push_back(std::move(img));
  };

  auto fill = [&](auto&& self, std::size_t gi) -> void {
    if (gi == groups.size()) {
      emit();
      return;
    }
    const Group& g = groups[gi];
    auto& tup = targets[gi];
    auto pick = [&](auto&& pick_ref, u32 depth) -> void {
      if (depth == g.m) {
        if (union_is_prefix(g, tup)) self(self, gi + 1);
        return;
      }
      for (u32 t = 0; t < g.limit; ++t) {
        if (std::find(tup.begin(), tup.end(), t) != tup.end()) continue;
        tup.push_back(t);
        pick_ref(pick_ref, depth + 1);
        tup.pop_back();
      }
    };
    pick(pick, 0);
  };
  fill(fill, 0);
}

// ---------------------------------------------------------------------------
// Generic tree walk
// ---------------------------------------------------------------------------

/// Depth-first search over the parent tree of tuple, set or map values,
/// expanding only canonical nodes. Position i of the walk is filled from the
/// canonical forms of a subdomain via their injective images; set nodes only
/// accept images above their maximum (the parent function drops the maximum,
/// so sets grow max-last), and map nodes follow their fixed sorted key list.
class TreeDfs final : public ValueIter {
 public:
  enum class Shape { Tuple, Set, Map };

  static std::unique_ptr<TreeDfs> tuple_over(const std::vector<DomPtr>& children,
                                             const CnfsOptions& opts) {
    auto it = std::unique_ptr<TreeDfs>(new TreeDfs(Shape::Tuple));
    for (const auto& ch : children)
      it->lists_.push_back(cnfs_collect(Domain(ch), opts));
    it->limit_ = children.size();
    return it;
  }

  static std::unique_ptr<TreeDfs> sets_over(const DomPtr& child,
                                            std::optional<u32> k,
                                            const CnfsOptions& opts) {
    auto it = std::unique_ptr<TreeDfs>(new TreeDfs(Shape::Set));
    it->lists_.push_back(cnfs_collect(Domain(child), opts));
    it->fixed_k_ = k;
    return it;
  }

  static std::unique_ptr<TreeDfs> maps_over(ValueList keys, const DomPtr& values,
                                            const CnfsOptions& opts) {
    auto it = std::unique_ptr<TreeDfs>(new TreeDfs(Shape::Map));
    it->lists_.push_back(cnfs_collect(Domain(values), opts));
    it->keys_ = std::move(keys);
    it->limit_ = it->keys_.size();
    return it;
  }

  std::optional<Value> next() override {
    if (!started_) {
      started_ = true;
      if (extend_at(0)) frames_.push_back(make_frame(AtomSets{}));
      if (emit_at(0)) return root_value();
    }
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      if (f.idx == f.candidates.size()) {
        frames_.pop_back();
        if (!path_.empty()) {
          path_.pop_back();
          if (shape_ == Shape::Map) entries_.pop_back();
        }
        continue;
      }
      const Value& cand = f.candidates[f.idx++];
      AtomSets ns = f.ext_base;
      ns.add_all(cand);
      Value node = build(cand);
      if (!canonical_with_counts(node, ns.counts())) continue;
      u32 depth = static_cast<u32>(path_.size()) + 1;
      if (!extend_at(depth)) return node;  // leaves are always emitted
      push(cand);
      frames_.push_back(make_frame(std::move(ns)));
      if (emit_at(depth)) return node;
    }
    return std::nullopt;
  }

 private:
  struct Frame {
    ValueList candidates;
    std::size_t idx = 0;
    AtomSets ext_base;  // node atoms, plus the next key's atoms for maps
  };

  explicit TreeDfs(Shape s) : shape_(s) {}

  bool emit_at(u32 depth) const {
    switch (shape_) {
      case Shape::Tuple:
      case Shape::Map:
        return depth == limit_;
      case Shape::Set:
        return !fixed_k_ || depth == *fixed_k_;
    }
    return false;
  }

  bool extend_at(u32 depth) const {
    switch (shape_) {
      case Shape::Tuple:
      case Shape::Map:
        return depth < limit_;
      case Shape::Set:
        return !fixed_k_ || depth < *fixed_k_;
    }
    return false;
  }

  Value root_value() const {
    switch (shape_) {
      case Shape::Tuple: return Value::tuple({});
      case Shape::Set: return Value::set({});
      case Shape::Map: return Value::map({});
    }
    return Value::unit();
  }

  Value build(const Value& cand) const {
    switch (shape_) {
      case Shape::Tuple: {
        ValueList items = path_;
        items.push_back(cand);
        return Value::tuple(std::move(items));
      }
      case Shape::Set: {
        ValueList items = path_;
        items.push_back(cand);
        return Value::set(std::move(items));
      }
      case Shape::Map: {
        MapEntries es = entries_;
        es.emplace_back(keys_[path_.size()], cand);
        return Value::map(std::move(es));
      }
    }
    return Value::unit();
  }

  void push(const Value& cand) {
    if (shape_ == Shape::Map) entries_.emplace_back(keys_[path_.size()], cand);
    path_.push_back(cand);
  }

  Frame make_frame(AtomSets node_sets) {
    std::size_t pos = path_.size();  // position about to be filled
    AtomSets ext = std::move(node_sets);
    if (shape_ == Shape::Map) ext.add_all(keys_[pos]);
    const ValueList& forms =
        shape_ == Shape::Tuple ? lists_[pos] : lists_.front();
    ValueList cands;
    for (const Value& c : forms) {
      std::size_t first = cands.size();
      enumerate_images(c, ext, cands);
      if (shape_ == Shape::Set && !path_.empty()) {
        const Value& bound = path_.back();
        cands.erase(std::remove_if(cands.begin() + first, cands.end(),
                                   [&](const Value& v) { return !(v > bound); }),
                    cands.end());
      }
    }
    return Frame{std::move(cands), 0, std::move(ext)};
  }

  Shape shape_;
  std::vector<ValueList> lists_;      // tuple: per position; set/map: one
  ValueList keys_;                    // map key list, sorted
  std::size_t limit_ = 0;             // tuple arity / key count
  std::optional<u32> fixed_k_;        // set cardinality constraint
  ValueList path_;                    // chosen elements (sets: ascending)
  MapEntries entries_;                // map shape mirror of path_
  std::vector<Frame> frames_;
  bool started_ = false;
};

// ---------------------------------------------------------------------------
// Elementary iterators
// ---------------------------------------------------------------------------

class ListIter final : public ValueIter {
 public:
  explicit ListIter(ValueList items) : items_(std::move(items)) {}
  std::optional<Value> next() override {
    if (i_ == items_.size()) return std::nullopt;
    return items_[i_++];
  }

 private:
  ValueList items_;
  std::size_t i_ = 0;
};

/// Concatenates the canonical forms of the operands; a class living in more
/// than one operand is reported once (first operand wins). Canonical forms
/// are least members of whole classes, so equality is class equality.
class JoinCnfs final : public ValueIter {
 public:
  JoinCnfs(std::vector<DomPtr> children, CnfsOptions opts)
      : children_(std::move(children)), opts_(opts) {}

  std::optional<Value> next() override {
    while (true) {
      if (!cur_) {
        if (ci_ == children_.size()) return std::nullopt;
        cur_ = cnfs_iter(Domain(children_[ci_++]), opts_);
      }
      auto v = cur_->next();
      if (!v) {
        cur_.reset();
        continue;
      }
      if (seen_.insert(*v).second) return v;
    }
  }

 private:
  std::vector<DomPtr> children_;
  CnfsOptions opts_;
  std::size_t ci_ = 0;
  ValueIterPtr cur_;
  std::set<Value> seen_;
};

// ---------------------------------------------------------------------------
// Flat fast path for subsets
// ---------------------------------------------------------------------------
// When every ground element is an atom or a fixed-arity tuple of atoms (arity
// <= 4, uset sizes <= 256, < 256 usets), elements pack into one u64 of 16-bit
// (uset rank << 8 | index) components, big-endian, which preserves the value
// order. The whole search then runs on sorted u64 arrays: candidate images
// are assembled bitwise and canonicity is checked with in-place
// next_permutation tables and a selection compare with early exit. Emission
// order is identical to the generic walk (equivalence-tested).

struct FlatPrep {
  std::vector<UsetId> uset_ids;  // sorted; rank = position
  std::vector<u32> uset_sizes;   // per rank
  u32 arity = 0;
  bool bare = false;  // ground elements are bare atoms, not 1-tuples

  struct CForm {
    std::vector<std::pair<u32, u32>> comps;  // (rank, source index) per position
    std::vector<u32> m;                      // per rank, source prefix length
  };
  std::vector<CForm> cforms;  // digested canonical forms of the child
};

std::optional<FlatPrep> prepare_flat(const SubsetsImpl& s, const CnfsOptions& opts) {
  const ValueList& ground = s.ground;
  if (ground.empty()) return std::nullopt;

  FlatPrep p;
  p.bare = ground.front().is(Kind::AtomK);
  p.arity = p.bare ? 1
                   : (ground.front().is(Kind::Tuple)
                          ? static_cast<u32>(ground.front().items().size())
                          : 0);
  if (p.arity < 1 || p.arity > 4) return std::nullopt;

  std::set<UsetId> ids;
  for (const Value& e : ground) {
    if (p.bare) {
      if (!e.is(Kind::AtomK)) return std::nullopt;
      ids.insert(e.as_atom().uset);
      continue;
    }
    if (!e.is(Kind::Tuple) || e.items().size() != p.arity) return std::nullopt;
    for (const Value& c : e.items()) {
      if (!c.is(Kind::AtomK)) return std::nullopt;
      ids.insert(c.as_atom().uset);
    }
  }
  p.uset_ids.assign(ids.begin(), ids.end());
  if (p.uset_ids.size() >= 256) return std::nullopt;
  for (UsetId id : p.uset_ids) {
    u32 sz = UsetRegistry::global().size_of(id);
    if (sz > 256) return std::nullopt;
    p.uset_sizes.push_back(sz);
  }

  auto rank_of = [&](UsetId id) {
    return static_cast<u32>(
        std::lower_bound(p.uset_ids.begin(), p.uset_ids.end(), id) -
        p.uset_ids.begin());
  };
  for (const Value& c : cnfs_collect(Domain(s.child), opts)) {
    FlatPrep::CForm f;
    f.m.assign(p.uset_ids.size(), 0);
    auto take = [&](Atom a) {
      u32 r = rank_of(a.uset);
      f.comps.emplace_back(r, a.index);
      f.m[r] = std::max(f.m[r], a.index + 1);
    };
    if (p.bare)
      take(c.as_atom());
    else
      for (const Value& comp : c.items()) take(comp.as_atom());
    p.cforms.push_back(std::move(f));
  }
  return p;
}

class FlatSetDfs final : public ValueIter {
 public:
  FlatSetDfs(FlatPrep prep, std::optional<u32> fixed_k)
      : p_(std::move(prep)), k_(fixed_k) {
    tables_.resize(p_.uset_ids.size());
  }

  std::optional<Value> next() override {
    if (!started_) {
      started_ = true;
      std::vector<u32> zero(p_.uset_ids.size(), 0);
      if (!k_ || *k_ > 0)
        frames_.push_back(Frame{candidates_for(zero, std::nullopt), 0, zero});
      if (!k_ || *k_ == 0) return decode(path_);
    }
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      if (f.idx == f.candidates.size()) {
        frames_.pop_back();
        if (!path_.empty()) path_.pop_back();
        continue;
      }
      u64 cand = f.candidates[f.idx++];
      std::vector<u32> nc = f.counts;
      bump(nc, cand);
      scratch_ = path_;
      scratch_.push_back(cand);
      if (!flat_canonical(scratch_, nc)) continue;
      u32 depth = static_cast<u32>(scratch_.size());
      if (k_ && depth == *k_) return decode(scratch_);
      path_.push_back(cand);
      frames_.push_back(Frame{candidates_for(nc, cand), 0, std::move(nc)});
      if (!k_) return decode(path_);
    }
    return std::nullopt;
  }

 private:
  struct Frame {
    std::vector<u64> candidates;
    std::size_t idx = 0;
    std::vector<u32> counts;  // per rank, the node's used prefix lengths
  };

  static u32 comp_shift(u32 arity, u32 pos) { return 16 * (arity - 1 - pos); }

  void bump(std::vector<u32>& counts, u64 key) const {
    for (u32 pos = 0; pos < p_.arity; ++pos) {
      u64 comp = (key >> comp_shift(p_.arity, pos)) & 0xFFFFu;
      u32 r = static_cast<u32>(comp >> 8), idx = static_cast<u32>(comp & 0xFFu);
      counts[r] = std::max(counts[r], idx + 1);
    }
  }

  /// Extension candidates of a node: per canonical child form, all injective
  /// per-rank target assignments with gap-free unions (base is a prefix, so
  /// fresh targets must fill count..count+f-1), above the bound, first
  /// occurrence kept. Mirrors enumerate_images order exactly.
  std::vector<u64> candidates_for(const std::vector<u32>& counts,
                                  std::optional<u64> bound) const {
    std::vector<u64> out;
    std::vector<u32> active;             // ranks used by the current form
    std::vector<std::vector<u32>> asg;   // per active rank, target tuple
    for (const auto& cf : p_.cforms) {
      std::size_t first = out.size();
      active.clear();
      for (u32 r = 0; r < cf.m.size(); ++r)
        if (cf.m[r] > 0) active.push_back(r);
      asg.assign(active.size(), {});

      auto emit = [&]() {
        u64 key = 0;
        for (u32 pos = 0; pos < p_.arity; ++pos) {
          auto [r, src] = cf.comps[pos];
          u32 ai = static_cast<u32>(
              std::lower_bound(active.begin(), active.end(), r) - active.begin());
          u32 tgt = asg[ai][src];
          key |= static_cast<u64>((r << 8) | tgt) << comp_shift(p_.arity, pos);
        }
        if (bound && key <= *bound) return;
        if (std::find(out.begin() + first, out.end(), key) == out.end())
          out.push_back(key);
      };

      auto fill = [&](auto&& self, std::size_t ai) -> void {
        if (ai == active.size()) {
          emit();
          return;
        }
        u32 r = active[ai];
        u32 m = cf.m[r];
        u32 limit = std::min(counts[r] + m, p_.uset_sizes[r]);
        auto& tup = asg[ai];
        auto pick = [&](auto&& pick_ref, u32 depth) -> void {
          if (depth == m) {
            u32 fresh = 0, mx = 0;
            for (u32 t : tup)
              if (t >= counts[r]) {
                ++fresh;
                mx = std::max(mx, t);
              }
            if (fresh == 0 || mx + 1 == counts[r] + fresh) self(self, ai + 1);
            return;
          }
          for (u32 t = 0; t < limit; ++t) {
            if (std::find(tup.begin(), tup.end(), t) != tup.end()) continue;
            tup.push_back(t);
            pick_ref(pick_ref, depth + 1);
            tup.pop_back();
          }
        };
        pick(pick, 0);
      };
      fill(fill, 0);
    }
    return out;
  }

  u64 permute_key(u64 key) const {
    u64 out = 0;
    for (u32 pos = 0; pos < p_.arity; ++pos) {
      u32 shift = comp_shift(p_.arity, pos);
      u64 comp = (key >> shift) & 0xFFFFu;
      u32 r = static_cast<u32>(comp >> 8), idx = static_cast<u32>(comp & 0xFFu);
      out |= static_cast<u64>((r << 8) | tables_[r][idx]) << shift;
    }
    return out;
  }

  bool advance_tables() {
    for (auto r = static_cast<int>(tables_.size()) - 1; r >= 0; --r) {
      if (tables_[r].size() < 2) continue;
      if (std::next_permutation(tables_[r].begin(), tables_[r].end())) return true;
    }
    return false;
  }

  /// True iff no per-uset prefix permutation makes the sorted key array
  /// lexicographically smaller. Sizes are equal, so array order is set order.
  bool flat_canonical(const std::vector<u64>& keys, const std::vector<u32>& counts) {
    bool any = false;
    for (std::size_t r = 0; r < tables_.size(); ++r) {
      tables_[r].resize(counts[r]);
      std::iota(tables_[r].begin(), tables_[r].end(), 0u);
      any = any || counts[r] >= 2;
    }
    if (!any) return true;
    std::size_t n = keys.size();
    permuted_.resize(n);
    used_.resize(n);
    while (advance_tables()) {
      for (std::size_t i = 0; i < n; ++i) permuted_[i] = permute_key(keys[i]);
      // Selection compare of sorted(permuted_) against keys, early exit.
      std::fill(used_.begin(), used_.end(), char(0));
      for (std::size_t pos = 0; pos < n; ++pos) {
        u64 best = 0;
        std::size_t bi = n;
        for (std::size_t i = 0; i < n; ++i)
          if (!used_[i] && (bi == n || permuted_[i] < best)) {
            best = permuted_[i];
            bi = i;
          }
        if (best < keys[pos]) return false;
        if (best > keys[pos]) goto next_perm;
        used_[bi] = 1;
      }
    next_perm:;
    }
    return true;
  }

  Value decode(const std::vector<u64>& keys) const {
    ValueList items;
    items.reserve(keys.size());
    for (u64 key : keys) {
      ValueList comps;
      comps.reserve(p_.arity);
      for (u32 pos = 0; pos < p_.arity; ++pos) {
        u64 comp = (key >> comp_shift(p_.arity, pos)) & 0xFFFFu;
        comps.push_back(Value::atom(Atom{p_.uset_ids[comp >> 8],
                                         static_cast<u32>(comp & 0xFFu)}));
      }
      items.push_back(p_.bare ? comps.front() : Value::tuple(std::move(comps)));
    }
    return Value::set(std::move(items));
  }

  FlatPrep p_;
  std::optional<u32> k_;
  std::vector<u64> path_;
  std::vector<u64> scratch_;
  std::vector<Frame> frames_;
  bool started_ = false;
  // canonicity scratch
  std::vector<std::vector<u32>> tables_;
  std::vector<u64> permuted_;
  std::vector<char> used_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

bool is_canonical(const Value& v) {
  std::vector<Atom> atoms = atoms_of(v);
  if (has_gap(atoms)) return false;
  std::vector<std::pair<UsetId, u32>> counts;
  for (Atom a : atoms) {
    if (!counts.empty() && counts.back().first == a.uset)
      ++counts.back().second;
    else
      counts.emplace_back(a.uset, 1);
  }
  return canonical_with_counts(v, counts);
}

SearchNode SearchNode::from_value(const Value& v) {
  SearchNode n;
  n.partial = v;
  switch (v.kind()) {
    case Kind::Tuple:
    case Kind::Set:
      n.depth = static_cast<std::uint32_t>(v.items().size());
      break;
    case Kind::Map:
      n.depth = static_cast<std::uint32_t>(v.entries().size());
      break;
    default:
      throw std::invalid_argument("search nodes are tuples, sets or maps, got " +
                                  v.str());
  }
  std::vector<Atom> atoms = atoms_of(v);
  if (has_gap(atoms))
    throw std::invalid_argument("search nodes need gap-free atoms, got " + v.str());
  for (Atom a : atoms) {
    if (!n.used_atoms.empty() && n.used_atoms.back().first == a.uset)
      ++n.used_atoms.back().second;
    else
      n.used_atoms.emplace_back(a.uset, 1);
  }
  return n;
}

std::vector<Value> extensions(const SearchNode& node, const Domain& sub) {
  if (!sub.strict())
    throw NonStrictDomainError("extensions require a strict subdomain, got " +
                               sub.describe());
  AtomSets base;
  for (const auto& [uset, count] : node.used_atoms) {
    std::vector<u32> idx(count);
    std::iota(idx.begin(), idx.end(), 0u);
    base.groups.emplace_back(uset, std::move(idx));
  }

  const Value* bound = nullptr;
  switch (node.partial.kind()) {
    case Kind::Tuple:
      break;
    case Kind::Set:
      if (!node.partial.items().empty()) bound = &node.partial.items().back();
      break;
    default:
      throw std::invalid_argument(
          "extensions take tuple or set nodes; maps extend through their key "
          "list inside the engine");
  }

  ValueList out;
  for (const Value& c : cnfs_collect(sub)) {
    std::size_t first = out.size();
    enumerate_images(c, base, out);
    if (bound)
      out.erase(std::remove_if(out.begin() + static_cast<std::ptrdiff_t>(first),
                               out.end(),
                               [&](const Value& v) { return !(v > *bound); }),
                out.end());
  }
  return out;
}

ValueIterPtr cnfs_iter(const Domain& d, const CnfsOptions& opts) {
  if (!d.strict())
    throw NonStrictDomainError("cnfs requires a strict domain, got " +
                               d.describe());
  const DomainImpl& im = d.impl();
  switch (im.dkind()) {
    case DomKind::Range:
    case DomKind::Boolean:
    case DomKind::NoneSingleton:
      // No atoms anywhere: every element is alone in its class.
      return d.iter();
    case DomKind::UsetElems: {
      const auto& u = static_cast<const UsetImpl&>(im).uset;
      return std::make_unique<ListIter>(ValueList{Value::atom(u.atom(0))});
    }
    case DomKind::CnfValues:
      return std::make_unique<ListIter>(
          static_cast<const CnfValuesImpl&>(im).canonical);
    case DomKind::Product:
      return TreeDfs::tuple_over(static_cast<const ProductImpl&>(im).children,
                                 opts);
    case DomKind::Subsets: {
      const auto& s = static_cast<const SubsetsImpl&>(im);
      if (!opts.force_generic)
        if (auto prep = prepare_flat(s, opts))
          return std::make_unique<FlatSetDfs>(std::move(*prep), s.k);
      return TreeDfs::sets_over(s.child, s.k, opts);
    }
    case DomKind::Mappings: {
      const auto& m = static_cast<const MappingsImpl&>(im);
      return TreeDfs::maps_over(m.key_list, m.values, opts);
    }
    case DomKind::Join:
      return std::make_unique<JoinCnfs>(static_cast<const JoinImpl&>(im).children,
                                        opts);
    default:
      throw NonStrictDomainError("cnfs requires a strict domain, got " +
                                 d.describe());
  }
}

ValueList cnfs_collect(const Domain& d, const CnfsOptions& opts) {
  ValueList out;
  auto it = cnfs_iter(d, opts);
  while (auto v = it->next()) out.push_back(std::move(*v));
  return out;
}

}  // namespace canonforge
