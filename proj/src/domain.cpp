#include "canonforge/domain.hpp"

#include <algorithm>
#include <sstream>

#include "canonforge/permutation.hpp"
#include "domain_impl.hpp"
#include "rand_util.hpp"

namespace canonforge {

namespace {

std::optional<std::uint64_t> mul_fits(std::optional<std::uint64_t> a,
                                      std::optional<std::uint64_t> b) {
  if (!a || !b) return std::nullopt;
  if (*a == 0 || *b == 0) return std::uint64_t{0};
  std::uint64_t r = *a * *b;
  if (r / *a != *b) return std::nullopt;  // overflowed
  return r;
}

std::optional<std::uint64_t> add_fits(std::optional<std::uint64_t> a,
                                      std::optional<std::uint64_t> b) {
  if (!a || !b) return std::nullopt;
  std::uint64_t r = *a + *b;
  if (r < *a) return std::nullopt;
  return r;
}

std::optional<std::uint64_t> big_to_u64(const BigInt& n) {
  if (n > BigInt(~0ull)) return std::nullopt;
  return static_cast<std::uint64_t>(n);
}

BigInt binom(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  BigInt out = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    out *= BigInt(n - r + i);
    out /= BigInt(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slice iterators
// ---------------------------------------------------------------------------

class RangeSlice final : public SignalIter {
public:
  RangeSlice(std::int64_t start, std::uint64_t count) : next_(start), remaining_(count) {}

  std::optional<StreamSignal> next() override {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    return StreamSignal(Value::integer(next_++));
  }

private:
  std::int64_t next_;
  std::uint64_t remaining_;
};

class ListSlice final : public SignalIter {
public:
  ListSlice(DomPtr owner, const ValueList& items, std::uint64_t offset, std::uint64_t count)
      : owner_(std::move(owner)), items_(&items), pos_(offset), end_(offset + count) {}

  std::optional<StreamSignal> next() override {
    if (pos_ >= end_) return std::nullopt;
    return StreamSignal((*items_)[pos_++]);
  }

private:
  DomPtr owner_;  // keeps the item storage alive
  const ValueList* items_;
  std::uint64_t pos_, end_;
};

class UsetSlice final : public SignalIter {
public:
  UsetSlice(UsetId uset, std::uint64_t offset, std::uint64_t count)
      : uset_(uset), pos_(offset), end_(offset + count) {}

  std::optional<StreamSignal> next() override {
    if (pos_ >= end_) return std::nullopt;
    return StreamSignal(Value::atom(Atom{uset_, static_cast<std::uint32_t>(pos_++)}));
  }

private:
  UsetId uset_;
  std::uint64_t pos_, end_;
};

// Row-major product: the first child is the slowest index. Recursively the
// slice is head rows x tail tuples where the tail is the product of the
// remaining children; a skip of n head rows covers n * tail_span positions.
class ProductSlice final : public SignalIter {
public:
  ProductSlice(std::shared_ptr<const std::vector<DomPtr>> all, std::size_t first,
               std::uint64_t offset, std::uint64_t count)
      : all_(std::move(all)), first_(first), remaining_(count) {
    tail_span_ = 1;
    for (std::size_t i = first_ + 1; i < all_->size(); ++i) tail_span_ *= *(*all_)[i]->span();
    head_pos_ = tail_span_ ? offset / tail_span_ : 0;
    tail_off_ = tail_span_ ? offset % tail_span_ : 0;
  }

  std::optional<StreamSignal> next() override {
    while (true) {
      if (remaining_ == 0) return std::nullopt;
      if (first_ == all_->size()) {  // empty product: the single () at position 0
        remaining_ = 0;
        return StreamSignal(Value::tuple({}));
      }
      const DomPtr& head = (*all_)[first_];
      if (!head_it_) head_it_ = head->slice(head_pos_, *head->span() - head_pos_);
      if (!head_val_) {
        StreamSignal sig = *head_it_->next();  // head slice outlives remaining_
        if (auto* sk = std::get_if<Skipped>(&sig)) {
          std::uint64_t dropped =
              std::min(remaining_, sk->count * tail_span_ - tail_off_);
          remaining_ -= dropped;
          head_pos_ += sk->count;
          tail_off_ = 0;
          return StreamSignal(Skipped{dropped});
        }
        head_val_ = std::get<Value>(sig);
        ++head_pos_;
        tail_it_ = std::make_unique<ProductSlice>(all_, first_ + 1, tail_off_,
                                                  std::min(remaining_, tail_span_ - tail_off_));
        tail_off_ = 0;
      }
      std::optional<StreamSignal> sig = tail_it_->next();
      if (!sig) {  // row finished
        head_val_.reset();
        tail_it_.reset();
        continue;
      }
      if (auto* sk = std::get_if<Skipped>(&*sig)) {
        remaining_ -= sk->count;
        return sig;
      }
      --remaining_;
      auto tail_items = std::get<Value>(*sig).items();
      ValueList items;
      items.reserve(tail_items.size() + 1);
      items.push_back(*head_val_);
      items.insert(items.end(), tail_items.begin(), tail_items.end());
      return StreamSignal(Value::tuple(std::move(items)));
    }
  }

private:
  std::shared_ptr<const std::vector<DomPtr>> all_;
  std::size_t first_;
  std::uint64_t remaining_;
  std::uint64_t tail_span_ = 1;
  std::uint64_t head_pos_ = 0;
  std::uint64_t tail_off_ = 0;
  SignalIterPtr head_it_;
  std::optional<Value> head_val_;
  SignalIterPtr tail_it_;
};

// Subsets in lexicographic prefix order over the sorted ground list:
// {} first, then every set is followed by its extensions with strictly
// larger ground indices. The index vector is the DFS path.
std::vector<std::uint32_t> unrank_subset(std::uint64_t rank, std::uint32_t m) {
  std::vector<std::uint32_t> s;
  if (rank == 0) return s;
  --rank;
  for (std::uint32_t j = 0;; ++j) {
    std::uint64_t subtree = 1ull << (m - 1 - j);  // sets whose next index is j
    if (rank < subtree) {
      s.push_back(j);
      if (rank == 0) return s;
      --rank;
    } else {
      rank -= subtree;
    }
  }
}

bool next_subset(std::vector<std::uint32_t>& s, std::uint32_t m) {
  std::uint32_t nxt = s.empty() ? 0 : s.back() + 1;
  if (nxt < m) {
    s.push_back(nxt);
    return true;
  }
  if (s.empty()) return false;
  s.pop_back();  // the popped index was m-1
  if (s.empty()) return false;
  ++s.back();
  return true;
}

// Fixed-cardinality subsets in lexicographic order of ascending index
// tuples, unranked through the combinatorial number system.
std::vector<std::uint32_t> unrank_combination(std::uint64_t rank, std::uint32_t m,
                                              std::uint32_t k) {
  std::vector<std::uint32_t> s;
  s.reserve(k);
  BigInt rem = rank;
  std::uint32_t v = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    for (;; ++v) {
      BigInt c = binom(m - 1 - v, k - 1 - i);
      if (rem < c) {
        s.push_back(v++);
        break;
      }
      rem -= c;
    }
  }
  return s;
}

bool next_combination(std::vector<std::uint32_t>& s, std::uint32_t m) {
  std::uint32_t k = static_cast<std::uint32_t>(s.size());
  if (k == 0) return false;
  std::uint32_t i = k;
  while (i-- > 0) {
    if (s[i] != m - k + i) {
      ++s[i];
      for (std::uint32_t j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
      return true;
    }
  }
  return false;
}

class SubsetsSlice final : public SignalIter {
public:
  SubsetsSlice(std::shared_ptr<const SubsetsImpl> impl, std::uint64_t offset,
               std::uint64_t count)
      : impl_(std::move(impl)), remaining_(count) {
    if (remaining_ == 0) return;  // offset may equal the span; nothing to unrank
    std::uint32_t m = static_cast<std::uint32_t>(impl_->ground.size());
    idxs_ = impl_->k ? unrank_combination(offset, m, *impl_->k) : unrank_subset(offset, m);
  }

  std::optional<StreamSignal> next() override {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    ValueList items;
    items.reserve(idxs_.size());
    for (std::uint32_t i : idxs_) items.push_back(impl_->ground[i]);
    Value out = Value::set(std::move(items));
    if (remaining_ > 0) {
      std::uint32_t m = static_cast<std::uint32_t>(impl_->ground.size());
      impl_->k ? next_combination(idxs_, m) : next_subset(idxs_, m);
    }
    return StreamSignal(std::move(out));
  }

private:
  std::shared_ptr<const SubsetsImpl> impl_;
  std::uint64_t remaining_;
  std::vector<std::uint32_t> idxs_;
};

// Value-assignment odometer over compare-sorted keys, last key fastest.
// The values domain is Full-sliceable whenever the mapping is (enforced at
// construction), so per-key cursors never see skips.
class MappingsSlice final : public SignalIter {
public:
  MappingsSlice(std::shared_ptr<const MappingsImpl> impl, std::uint64_t offset,
                std::uint64_t count)
      : impl_(std::move(impl)), remaining_(count) {
    if (remaining_ == 0) return;  // offset may equal the span; no cursors needed
    vspan_ = *impl_->values->span();
    std::size_t k = impl_->key_list.size();
    digits_.resize(k);
    std::uint64_t r = offset;
    for (std::size_t i = k; i-- > 0;) {
      digits_[i] = r % vspan_;
      r /= vspan_;
    }
    for (std::size_t i = 0; i < k; ++i) {
      cursors_.push_back(impl_->values->slice(digits_[i], vspan_ - digits_[i]));
      vals_.push_back(pull(i));
    }
  }

  std::optional<StreamSignal> next() override {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    if (impl_->key_list.empty()) {  // single empty map at position 0
      remaining_ = 0;
      return StreamSignal(Value::map({}));
    }
    MapEntries entries;
    entries.reserve(vals_.size());
    for (std::size_t i = 0; i < vals_.size(); ++i)
      entries.emplace_back(impl_->key_list[i], vals_[i]);
    Value out = Value::map(std::move(entries));
    if (remaining_ > 0) advance();
    return StreamSignal(std::move(out));
  }

private:
  Value pull(std::size_t i) { return std::get<Value>(*cursors_[i]->next()); }

  void advance() {
    for (std::size_t i = digits_.size(); i-- > 0;) {
      if (++digits_[i] < vspan_) {
        vals_[i] = pull(i);
        return;
      }
      digits_[i] = 0;  // wrap: restart this key's cursor, carry leftwards
      cursors_[i] = impl_->values->slice(0, vspan_);
      vals_[i] = pull(i);
    }
  }

  std::shared_ptr<const MappingsImpl> impl_;
  std::uint64_t remaining_;
  std::uint64_t vspan_ = 0;
  std::vector<std::uint64_t> digits_;
  std::vector<SignalIterPtr> cursors_;
  ValueList vals_;
};

class JoinSlice final : public SignalIter {
public:
  JoinSlice(std::shared_ptr<const JoinImpl> impl, std::uint64_t offset, std::uint64_t count)
      : impl_(std::move(impl)) {
    for (const DomPtr& child : impl_->children) {
      std::uint64_t cspan = *child->span();
      if (offset >= cspan) {
        offset -= cspan;
        continue;
      }
      std::uint64_t take = std::min(count, cspan - offset);
      if (take > 0) segments_.push_back({child, offset, take});
      count -= take;
      offset = 0;
      if (count == 0) break;
    }
  }

  std::optional<StreamSignal> next() override {
    while (true) {
      if (!current_) {
        if (seg_ >= segments_.size()) return std::nullopt;
        const Segment& s = segments_[seg_];
        current_ = s.child->slice(s.offset, s.count);
      }
      if (auto sig = current_->next()) return sig;
      current_.reset();
      ++seg_;
    }
  }

private:
  struct Segment {
    DomPtr child;
    std::uint64_t offset, count;
  };
  std::shared_ptr<const JoinImpl> impl_;
  std::vector<Segment> segments_;
  std::size_t seg_ = 0;
  SignalIterPtr current_;
};

class MapSlice final : public SignalIter {
public:
  MapSlice(std::shared_ptr<const MapImpl> impl, SignalIterPtr inner)
      : impl_(std::move(impl)), inner_(std::move(inner)) {}

  std::optional<StreamSignal> next() override {
    auto sig = inner_->next();
    if (!sig || std::holds_alternative<Skipped>(*sig)) return sig;
    return StreamSignal(apply_map_fn(impl_->fn, impl_->label, std::get<Value>(*sig)));
  }

private:
  std::shared_ptr<const MapImpl> impl_;
  SignalIterPtr inner_;
};

class FilterSlice final : public SignalIter {
public:
  FilterSlice(std::shared_ptr<const FilterImpl> impl, SignalIterPtr inner)
      : impl_(std::move(impl)), inner_(std::move(inner)) {}

  std::optional<StreamSignal> next() override {
    auto sig = inner_->next();
    if (!sig || std::holds_alternative<Skipped>(*sig)) return sig;
    const Value& v = std::get<Value>(*sig);
    if (apply_pred_fn(impl_->pred, impl_->label, v)) return sig;
    return StreamSignal(Skipped{1});
  }

private:
  std::shared_ptr<const FilterImpl> impl_;
  SignalIterPtr inner_;
};

class DropSkips final : public ValueIter {
public:
  explicit DropSkips(SignalIterPtr inner) : inner_(std::move(inner)) {}

  std::optional<Value> next() override {
    while (auto sig = inner_->next()) {
      if (auto* v = std::get_if<Value>(&*sig)) return std::move(*v);
    }
    return std::nullopt;
  }

private:
  SignalIterPtr inner_;
};

template <typename T>
std::shared_ptr<const T> shared_self(const T* self) {
  return std::static_pointer_cast<const T>(self->shared_from_this());
}

}  // namespace

// ---------------------------------------------------------------------------
// Impl methods
// ---------------------------------------------------------------------------

Value apply_map_fn(const MapFn& fn, const std::string& label, const Value& v) {
  try {
    return fn(v);
  } catch (const TransformError&) {
    throw;
  } catch (const std::exception& e) {
    throw TransformError("map[" + label + "] failed on " + v.str() + ": " + e.what());
  }
}

bool apply_pred_fn(const PredFn& fn, const std::string& label, const Value& v) {
  try {
    return fn(v);
  } catch (const TransformError&) {
    throw;
  } catch (const std::exception& e) {
    throw TransformError("filter[" + label + "] failed on " + v.str() + ": " + e.what());
  }
}

std::string RangeImpl::describe() const { return "range(" + std::to_string(n) + ")"; }

SignalIterPtr RangeImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<RangeSlice>(static_cast<std::int64_t>(offset), count);
}

Value RangeImpl::sample(Rng& rng, const SampleOptions&) const {
  if (n == 0) throw SamplingError("cannot sample empty domain " + describe());
  return Value::integer(static_cast<std::int64_t>(uniform_below(rng, n)));
}

SignalIterPtr ListedImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<ListSlice>(shared_from_this(), items, offset, count);
}

Value ListedImpl::sample(Rng& rng, const SampleOptions&) const {
  if (items.empty()) throw SamplingError("cannot sample empty domain " + describe());
  return items[uniform_below(rng, items.size())];
}

std::string ValuesImpl::describe() const {
  return "values[" + std::to_string(items.size()) + "]";
}

std::string UsetImpl::describe() const {
  return "uset(" + uset.name() + ":" + std::to_string(uset.size()) + ")";
}

SignalIterPtr UsetImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<UsetSlice>(uset.id(), offset, count);
}

Value UsetImpl::sample(Rng& rng, const SampleOptions&) const {
  return Value::atom(Atom{uset.id(), static_cast<std::uint32_t>(uniform_below(rng, uset.size()))});
}

CnfValuesImpl::CnfValuesImpl(ValueList canonical_items) : canonical(std::move(canonical_items)) {
  // Verify canonicity and pairwise distinctness, then take the isomorphism
  // closure as the element list (sorted => deterministic iteration).
  std::vector<Value> closure;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const Value& item = canonical[i];
    if (canonical_form(item) != item)
      throw EngineError("cnf_values item " + item.str() + " is not a canonical form (expected " +
                        canonical_form(item).str() + ")");
    for (std::size_t j = 0; j < i; ++j) {
      if (canonical[j] == item)
        throw EngineError("cnf_values item " + item.str() + " appears twice");
    }

    // All injective per-uset relabelings of the item's atoms.
    std::vector<Atom> used = atoms_of(item);
    std::vector<std::pair<UsetId, std::vector<std::uint32_t>>> groups;
    for (Atom a : used) {
      if (groups.empty() || groups.back().first != a.uset) groups.push_back({a.uset, {}});
      groups.back().second.push_back(a.index);
    }
    std::vector<std::vector<std::uint32_t>> assignment(groups.size());
    auto emit = [&]() {
      Permutation p;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for (std::size_t t = 0; t < assignment[g].size(); ++t)
          pairs.emplace_back(groups[g].second[t], assignment[g][t]);
        p = p.after(Permutation::from_pairs(groups[g].first, pairs));
      }
      closure.push_back(apply(item, p));
    };
    auto rec = [&](auto&& self, std::size_t g) -> void {
      if (g == groups.size()) {
        emit();
        return;
      }
      std::uint32_t usize = UsetRegistry::global().size_of(groups[g].first);
      std::uint32_t need = static_cast<std::uint32_t>(groups[g].second.size());
      std::vector<bool> taken(usize, false);
      auto pick = [&](auto&& pickself, std::uint32_t depth) -> void {
        if (depth == need) {
          self(self, g + 1);
          return;
        }
        for (std::uint32_t t = 0; t < usize; ++t) {
          if (taken[t]) continue;
          taken[t] = true;
          assignment[g].push_back(t);
          pickself(pickself, depth + 1);
          assignment[g].pop_back();
          taken[t] = false;
        }
      };
      pick(pick, 0);
    };
    rec(rec, 0);
  }
  std::sort(closure.begin(), closure.end());
  closure.erase(std::unique(closure.begin(), closure.end()), closure.end());
  items = std::move(closure);
}

std::string CnfValuesImpl::describe() const {
  return "cnf_values[" + std::to_string(canonical.size()) + "]";
}

std::string ProductImpl::describe() const {
  if (uniform)
    return "sequences(" + children[0]->describe() + ", " + std::to_string(children.size()) + ")";
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i) out << " * ";
    out << children[i]->describe();
  }
  out << ")";
  return out.str();
}

std::optional<BigInt> ProductImpl::size() const {
  BigInt total = 1;
  for (const DomPtr& c : children) {
    auto s = c->size();
    if (!s) return std::nullopt;
    total *= *s;
  }
  return total;
}

std::optional<std::uint64_t> ProductImpl::span() const {
  std::optional<std::uint64_t> total = 1;
  for (const DomPtr& c : children) total = mul_fits(total, c->span());
  return total;
}

Slicing ProductImpl::capability() const {
  if (!span()) return Slicing::None;
  for (const DomPtr& c : children)
    if (c->capability() == Slicing::Filtered) return Slicing::Filtered;
  return Slicing::Full;
}

bool ProductImpl::strict() const {
  return std::all_of(children.begin(), children.end(),
                     [](const DomPtr& c) { return c->strict(); });
}

SignalIterPtr ProductImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  auto all = std::make_shared<const std::vector<DomPtr>>(children);
  return std::make_unique<ProductSlice>(std::move(all), 0, offset, count);
}

Value ProductImpl::sample(Rng& rng, const SampleOptions& opts) const {
  ValueList items;
  items.reserve(children.size());
  for (const DomPtr& c : children) items.push_back(c->sample(rng, opts));
  return Value::tuple(std::move(items));
}

SubsetsImpl::SubsetsImpl(DomPtr child_in, std::optional<std::uint32_t> k_in)
    : child(std::move(child_in)), k(k_in) {
  if (!child->size() || child->capability() != Slicing::Full)
    throw EngineError("subsets requires an exact-size operand, got " + child->describe());
  ground.reserve(static_cast<std::size_t>(*child->span()));
  auto it = child->slice(0, *child->span());
  while (auto sig = it->next()) ground.push_back(std::get<Value>(std::move(*sig)));
  std::sort(ground.begin(), ground.end());
  ground.erase(std::unique(ground.begin(), ground.end()), ground.end());
  if (k && *k > ground.size())
    throw EngineError("subsets cardinality " + std::to_string(*k) + " exceeds ground size " +
                      std::to_string(ground.size()));
}

std::string SubsetsImpl::describe() const {
  std::string out = "subsets(" + child->describe();
  if (k) out += ", " + std::to_string(*k);
  return out + ")";
}

std::optional<BigInt> SubsetsImpl::size() const {
  if (k) return binom(ground.size(), *k);
  return BigInt(1) << ground.size();
}

std::optional<std::uint64_t> SubsetsImpl::span() const { return big_to_u64(*size()); }

Slicing SubsetsImpl::capability() const { return span() ? Slicing::Full : Slicing::None; }

SignalIterPtr SubsetsImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<SubsetsSlice>(shared_self(this), offset, count);
}

Value SubsetsImpl::sample(Rng& rng, const SampleOptions&) const {
  std::uint32_t m = static_cast<std::uint32_t>(ground.size());
  ValueList items;
  if (!k) {
    for (const Value& g : ground)
      if (rng() & 1u) items.push_back(g);
  } else {
    // Floyd's uniform k-subset of indices.
    std::vector<bool> in(m, false);
    for (std::uint32_t j = m - *k; j < m; ++j) {
      std::uint32_t t = static_cast<std::uint32_t>(uniform_below(rng, j + 1));
      if (in[t]) t = j;
      in[t] = true;
      items.push_back(ground[t]);
    }
  }
  return Value::set(std::move(items));
}

MappingsImpl::MappingsImpl(DomPtr keys_in, DomPtr values_in)
    : keys(std::move(keys_in)), values(std::move(values_in)) {
  if (!keys->size() || keys->capability() != Slicing::Full)
    throw EngineError("mappings requires an exact-size key domain, got " + keys->describe());
  if (!values->size())
    throw EngineError("mappings requires an exact-size value domain, got " + values->describe());
  key_list.reserve(static_cast<std::size_t>(*keys->span()));
  auto it = keys->slice(0, *keys->span());
  while (auto sig = it->next()) key_list.push_back(std::get<Value>(std::move(*sig)));
  std::sort(key_list.begin(), key_list.end());
  key_list.erase(std::unique(key_list.begin(), key_list.end()), key_list.end());
}

std::string MappingsImpl::describe() const {
  return "mappings(" + keys->describe() + " -> " + values->describe() + ")";
}

std::optional<BigInt> MappingsImpl::size() const {
  BigInt out = 1;
  for (std::size_t i = 0; i < key_list.size(); ++i) out *= *values->size();
  return out;
}

std::optional<std::uint64_t> MappingsImpl::span() const {
  std::optional<std::uint64_t> total = 1;
  for (std::size_t i = 0; i < key_list.size(); ++i) total = mul_fits(total, values->span());
  return total;
}

Slicing MappingsImpl::capability() const {
  if (!span()) return Slicing::None;
  return Slicing::Full;  // construction rejects filtered operands
}

SignalIterPtr MappingsImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<MappingsSlice>(shared_self(this), offset, count);
}

Value MappingsImpl::sample(Rng& rng, const SampleOptions& opts) const {
  MapEntries entries;
  entries.reserve(key_list.size());
  for (const Value& key : key_list) entries.emplace_back(key, values->sample(rng, opts));
  return Value::map(std::move(entries));
}

std::string JoinImpl::describe() const {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i) out << " + ";
    out << children[i]->describe();
  }
  out << ")";
  return out.str();
}

std::optional<BigInt> JoinImpl::size() const {
  BigInt total = 0;
  for (const DomPtr& c : children) {
    auto s = c->size();
    if (!s) return std::nullopt;
    total += *s;
  }
  return total;
}

std::optional<std::uint64_t> JoinImpl::span() const {
  std::optional<std::uint64_t> total = 0;
  for (const DomPtr& c : children) total = add_fits(total, c->span());
  return total;
}

Slicing JoinImpl::capability() const {
  if (!span()) return Slicing::None;
  for (const DomPtr& c : children)
    if (c->capability() == Slicing::Filtered) return Slicing::Filtered;
  return Slicing::Full;
}

bool JoinImpl::strict() const {
  return std::all_of(children.begin(), children.end(),
                     [](const DomPtr& c) { return c->strict(); });
}

SignalIterPtr JoinImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<JoinSlice>(shared_self(this), offset, count);
}

Value JoinImpl::sample(Rng& rng, const SampleOptions& opts) const {
  BigInt total = 0;
  for (const DomPtr& c : children) {
    auto s = c->size();
    if (!s)
      throw SamplingError("join sampling needs exact operand sizes; " + c->describe() +
                          " has none");
    total += *s;
  }
  if (total == 0) throw SamplingError("cannot sample empty domain " + describe());
  BigInt r = uniform_below_big(rng, total);
  for (const DomPtr& c : children) {
    BigInt s = *c->size();
    if (r < s) return c->sample(rng, opts);
    r -= s;
  }
  throw std::logic_error("unreachable join weight");
}

std::string MapImpl::describe() const {
  return "map[" + label + "](" + child->describe() + ")";
}

SignalIterPtr MapImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<MapSlice>(shared_self(this), child->slice(offset, count));
}

Value MapImpl::sample(Rng& rng, const SampleOptions& opts) const {
  return apply_map_fn(fn, label, child->sample(rng, opts));
}

std::string FilterImpl::describe() const {
  return "filter[" + label + "](" + child->describe() + ")";
}

Slicing FilterImpl::capability() const {
  return child->capability() == Slicing::None ? Slicing::None : Slicing::Filtered;
}

SignalIterPtr FilterImpl::slice(std::uint64_t offset, std::uint64_t count) const {
  return std::make_unique<FilterSlice>(shared_self(this), child->slice(offset, count));
}

Value FilterImpl::sample(Rng& rng, const SampleOptions& opts) const {
  for (std::uint32_t attempt = 0; attempt < opts.rejection_budget; ++attempt) {
    Value v = child->sample(rng, opts);
    if (apply_pred_fn(pred, label, v)) return v;
  }
  throw SamplingError("rejection budget (" + std::to_string(opts.rejection_budget) +
                      " attempts) exhausted sampling " + describe());
}

// ---------------------------------------------------------------------------
// Domain facade and builders
// ---------------------------------------------------------------------------

std::optional<BigInt> Domain::size() const { return impl_->size(); }
std::optional<std::uint64_t> Domain::span() const { return impl_->span(); }
Slicing Domain::capability() const { return impl_->capability(); }
bool Domain::strict() const { return impl_->strict(); }
std::string Domain::describe() const { return impl_->describe(); }

ValueIterPtr Domain::iter() const {
  if (capability() == Slicing::None)
    throw UnsupportedSlicingError("cannot iterate " + describe() +
                                  ": position space exceeds 64-bit indexing");
  return std::make_unique<DropSkips>(impl_->slice(0, *span()));
}

SignalIterPtr Domain::slice(std::uint64_t offset, std::uint64_t count) const {
  if (capability() == Slicing::None)
    throw UnsupportedSlicingError(describe() + " does not support slicing");
  std::uint64_t total = *span();
  if (offset > total || count > total - offset)
    throw std::out_of_range("slice [" + std::to_string(offset) + ", +" + std::to_string(count) +
                            ") exceeds span " + std::to_string(total) + " of " + describe());
  return impl_->slice(offset, count);
}

Value Domain::sample(Rng& rng, const SampleOptions& opts) const {
  return impl_->sample(rng, opts);
}

Domain range_domain(std::int64_t n) {
  if (n < 0) throw EngineError("range size must be nonnegative");
  return Domain(std::make_shared<RangeImpl>(n));
}

Domain values_domain(ValueList items) {
  return Domain(std::make_shared<ValuesImpl>(std::move(items)));
}

Domain boolean_domain() { return Domain(std::make_shared<BooleanImpl>()); }

Domain none_domain() { return Domain(std::make_shared<NoneImpl>()); }

Domain uset_domain(const Uset& u) { return Domain(std::make_shared<UsetImpl>(u)); }

Domain uset_domain(std::uint32_t n, std::string name) {
  if (n == 0) throw EngineError("uset size must be positive");
  return uset_domain(Uset(n, std::move(name)));
}

Domain cnf_values(ValueList items) {
  return Domain(std::make_shared<CnfValuesImpl>(std::move(items)));
}

Domain product(std::vector<Domain> ds) {
  std::vector<DomPtr> children;
  children.reserve(ds.size());
  for (const Domain& d : ds) children.push_back(d.node());
  return Domain(std::make_shared<ProductImpl>(std::move(children)));
}

Domain sequences(const Domain& d, std::uint32_t k) {
  std::vector<DomPtr> children(k, d.node());
  return Domain(std::make_shared<ProductImpl>(std::move(children), /*uniform=*/true));
}

Domain subsets(const Domain& d) {
  return Domain(std::make_shared<SubsetsImpl>(d.node(), std::nullopt));
}

Domain subsets(const Domain& d, std::uint32_t k) {
  return Domain(std::make_shared<SubsetsImpl>(d.node(), k));
}

Domain mappings(const Domain& keys, const Domain& values) {
  return Domain(std::make_shared<MappingsImpl>(keys.node(), values.node()));
}

Domain join(std::vector<Domain> ds) {
  std::vector<DomPtr> children;
  children.reserve(ds.size());
  for (const Domain& d : ds) children.push_back(d.node());
  return Domain(std::make_shared<JoinImpl>(std::move(children)));
}

Domain map_domain(const Domain& d, MapFn f, std::string label) {
  return Domain(std::make_shared<MapImpl>(d.node(), std::move(f), std::move(label)));
}

Domain filter_domain(const Domain& d, PredFn pred, std::string label) {
  return Domain(std::make_shared<FilterImpl>(d.node(), std::move(pred), std::move(label)));
}

ValueList collect_all(const Domain& d) {
  ValueList out;
  auto it = d.iter();
  while (auto v = it->next()) out.push_back(std::move(*v));
  return out;
}

}  // namespace canonforge
