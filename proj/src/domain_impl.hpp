#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "canonforge/domain.hpp"

namespace canonforge {

enum class DomKind {
  Range,
  Values,
  Boolean,
  NoneSingleton,
  UsetElems,
  CnfValues,
  Product,
  Subsets,
  Mappings,
  Join,
  MapTransform,
  FilterTransform,
};

using DomPtr = std::shared_ptr<const DomainImpl>;

class DomainImpl : public std::enable_shared_from_this<DomainImpl> {
public:
  virtual ~DomainImpl() = default;

  virtual DomKind dkind() const = 0;
  virtual std::string describe() const = 0;
  virtual std::optional<BigInt> size() const = 0;
  virtual std::optional<std::uint64_t> span() const = 0;
  virtual Slicing capability() const = 0;
  virtual bool strict() const = 0;
  virtual SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const = 0;
  virtual Value sample(Rng& rng, const SampleOptions& opts) const = 0;
};

struct RangeImpl final : DomainImpl {
  std::int64_t n;

  explicit RangeImpl(std::int64_t n) : n(n) {}
  DomKind dkind() const override { return DomKind::Range; }
  std::string describe() const override;
  std::optional<BigInt> size() const override { return BigInt(n); }
  std::optional<std::uint64_t> span() const override { return static_cast<std::uint64_t>(n); }
  Slicing capability() const override { return Slicing::Full; }
  bool strict() const override { return true; }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

/// Shared base for domains holding an explicit element list.
struct ListedImpl : DomainImpl {
  ValueList items;

  std::optional<BigInt> size() const override { return BigInt(items.size()); }
  std::optional<std::uint64_t> span() const override { return items.size(); }
  Slicing capability() const override { return Slicing::Full; }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct ValuesImpl final : ListedImpl {
  explicit ValuesImpl(ValueList xs) { items = std::move(xs); }
  DomKind dkind() const override { return DomKind::Values; }
  std::string describe() const override;
  bool strict() const override { return false; }
};

struct BooleanImpl final : ListedImpl {
  BooleanImpl() { items = {Value::boolean(false), Value::boolean(true)}; }
  DomKind dkind() const override { return DomKind::Boolean; }
  std::string describe() const override { return "bool"; }
  bool strict() const override { return true; }
};

struct NoneImpl final : ListedImpl {
  NoneImpl() { items = {Value::unit()}; }
  DomKind dkind() const override { return DomKind::NoneSingleton; }
  std::string describe() const override { return "none"; }
  bool strict() const override { return true; }
};

struct UsetImpl final : DomainImpl {
  Uset uset;

  explicit UsetImpl(Uset u) : uset(std::move(u)) {}
  DomKind dkind() const override { return DomKind::UsetElems; }
  std::string describe() const override;
  std::optional<BigInt> size() const override { return BigInt(uset.size()); }
  std::optional<std::uint64_t> span() const override { return uset.size(); }
  Slicing capability() const override { return Slicing::Full; }
  bool strict() const override { return true; }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct CnfValuesImpl final : ListedImpl {
  ValueList canonical;  // the given representatives, in given order

  /// items becomes the sorted isomorphism closure of `canonical`.
  explicit CnfValuesImpl(ValueList canonical_items);
  DomKind dkind() const override { return DomKind::CnfValues; }
  std::string describe() const override;
  bool strict() const override { return true; }
};

struct ProductImpl final : DomainImpl {
  std::vector<DomPtr> children;
  /// Distinguishes sequences(d, k) for display and serialization only.
  bool uniform = false;

  explicit ProductImpl(std::vector<DomPtr> cs, bool uniform = false)
      : children(std::move(cs)), uniform(uniform) {}
  DomKind dkind() const override { return DomKind::Product; }
  std::string describe() const override;
  std::optional<BigInt> size() const override;
  std::optional<std::uint64_t> span() const override;
  Slicing capability() const override;
  bool strict() const override;
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct SubsetsImpl final : DomainImpl {
  DomPtr child;
  std::optional<std::uint32_t> k;  // fixed-cardinality variant
  ValueList ground;                // child's elements, sorted, deduplicated

  SubsetsImpl(DomPtr child, std::optional<std::uint32_t> k);
  DomKind dkind() const override { return DomKind::Subsets; }
  std::string describe() const override;
  std::optional<BigInt> size() const override;
  std::optional<std::uint64_t> span() const override;
  Slicing capability() const override;
  bool strict() const override { return child->strict(); }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct MappingsImpl final : DomainImpl {
  DomPtr keys;
  DomPtr values;
  ValueList key_list;  // keys' elements sorted by compare, deduplicated

  MappingsImpl(DomPtr keys, DomPtr values);
  DomKind dkind() const override { return DomKind::Mappings; }
  std::string describe() const override;
  std::optional<BigInt> size() const override;
  std::optional<std::uint64_t> span() const override;
  Slicing capability() const override;
  bool strict() const override { return keys->strict() && values->strict(); }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct JoinImpl final : DomainImpl {
  std::vector<DomPtr> children;

  explicit JoinImpl(std::vector<DomPtr> cs) : children(std::move(cs)) {}
  DomKind dkind() const override { return DomKind::Join; }
  std::string describe() const override;
  std::optional<BigInt> size() const override;
  std::optional<std::uint64_t> span() const override;
  Slicing capability() const override;
  bool strict() const override;
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct MapImpl final : DomainImpl {
  DomPtr child;
  MapFn fn;
  std::string label;

  MapImpl(DomPtr child, MapFn fn, std::string label)
      : child(std::move(child)), fn(std::move(fn)), label(std::move(label)) {}
  DomKind dkind() const override { return DomKind::MapTransform; }
  std::string describe() const override;
  std::optional<BigInt> size() const override { return child->size(); }
  std::optional<std::uint64_t> span() const override { return child->span(); }
  Slicing capability() const override { return child->capability(); }
  bool strict() const override { return false; }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

struct FilterImpl final : DomainImpl {
  DomPtr child;
  PredFn pred;
  std::string label;

  FilterImpl(DomPtr child, PredFn pred, std::string label)
      : child(std::move(child)), pred(std::move(pred)), label(std::move(label)) {}
  DomKind dkind() const override { return DomKind::FilterTransform; }
  std::string describe() const override;
  std::optional<BigInt> size() const override { return std::nullopt; }
  std::optional<std::uint64_t> span() const override { return child->span(); }
  Slicing capability() const override;
  bool strict() const override { return false; }
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const override;
  Value sample(Rng& rng, const SampleOptions& opts) const override;
};

/// Shared by transforms and errors: apply a user function with element
/// context attached to any exception.
Value apply_map_fn(const MapFn& fn, const std::string& label, const Value& v);
bool apply_pred_fn(const PredFn& fn, const std::string& label, const Value& v);

}  // namespace canonforge
