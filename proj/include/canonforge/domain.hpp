#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "canonforge/errors.hpp"
#include "canonforge/value.hpp"

namespace canonforge {

using BigInt = boost::multiprecision::cpp_int;
using Rng = std::mt19937_64;

/// How a domain can be cut into position ranges for parallel work.
enum class Slicing {
  Full,      // exact size, iterate from any offset, every position an element
  Filtered,  // positions may be skipped; skips are reported explicitly
  None,      // position space exceeds 64 bits; only whole-stream fallbacks work
};

/// Signal of a sliced iteration: an element, or a count of positions the
/// producer dropped (filtered out). Consumers can prove disjointness of
/// adjacent slices by adding elements and skips.
struct Skipped {
  std::uint64_t count = 0;
};
using StreamSignal = std::variant<Value, Skipped>;

class ValueIter {
public:
  virtual ~ValueIter() = default;
  virtual std::optional<Value> next() = 0;
};
using ValueIterPtr = std::unique_ptr<ValueIter>;

class SignalIter {
public:
  virtual ~SignalIter() = default;
  virtual std::optional<StreamSignal> next() = 0;
};
using SignalIterPtr = std::unique_ptr<SignalIter>;

using MapFn = std::function<Value(const Value&)>;
using PredFn = std::function<bool(const Value&)>;

struct SampleOptions {
  /// Rejection attempts per element before SamplingError (per filter layer).
  std::uint32_t rejection_budget = 10000;
};

class DomainImpl;
class Pipeline;

/// Immutable description of a finite collection of values. Composing never
/// mutates operands; copies share the underlying node.
class Domain {
public:
  explicit Domain(std::shared_ptr<const DomainImpl> impl) : impl_(std::move(impl)) {}

  /// Exact element count, absent when a filter makes it unknown.
  std::optional<BigInt> size() const;
  bool exact_size() const { return size().has_value(); }
  /// Number of unfiltered iteration positions, when it fits 64 bits.
  std::optional<std::uint64_t> span() const;
  Slicing capability() const;
  /// Strict domains contain only permutation-closed sets of values and
  /// support cnfs().
  bool strict() const;
  std::string describe() const;

  /// Deterministic full iteration (filtered domains: surviving elements).
  ValueIterPtr iter() const;
  /// Iteration of positions [offset, offset+count); Filtered domains
  /// interleave Skipped signals. Requires Full or Filtered capability and
  /// offset+count <= span().
  SignalIterPtr slice(std::uint64_t offset, std::uint64_t count) const;
  /// One element, uniform over the domain (rejection on filters).
  Value sample(Rng& rng, const SampleOptions& opts = {}) const;

  /// Pipeline entry points (sources).
  Pipeline iterate() const;
  Pipeline generate(std::uint64_t count) const;
  Pipeline cnfs() const;

  const DomainImpl& impl() const { return *impl_; }
  const std::shared_ptr<const DomainImpl>& node() const { return impl_; }

private:
  std::shared_ptr<const DomainImpl> impl_;
};

/// Elementary domains.
Domain range_domain(std::int64_t n);
Domain values_domain(ValueList items);
Domain boolean_domain();
Domain none_domain();
Domain uset_domain(const Uset& u);
Domain uset_domain(std::uint32_t n, std::string name);
/// Strict domain given by canonical representatives; contains their whole
/// isomorphism classes. Items must be canonical and pairwise non-isomorphic.
Domain cnf_values(ValueList items);

/// Compositions. Product iterates row-major (last operand fastest);
/// sequences(d, k) is the k-fold product of d; subsets iterates in
/// lexicographic prefix order over the sorted ground elements; mappings
/// iterate value assignments with keys sorted by compare, last key fastest;
/// join concatenates operands.
Domain product(std::vector<Domain> ds);
Domain sequences(const Domain& d, std::uint32_t k);
Domain subsets(const Domain& d);
Domain subsets(const Domain& d, std::uint32_t k);
Domain mappings(const Domain& keys, const Domain& values);
Domain join(std::vector<Domain> ds);

/// Transformations. map marks the result non-strict (f is arbitrary);
/// filter keeps iteration order, hides the exact size and downgrades
/// slicing to Filtered.
Domain map_domain(const Domain& d, MapFn f, std::string label = "fn");
Domain filter_domain(const Domain& d, PredFn pred, std::string label = "pred");

inline Domain operator*(const Domain& a, const Domain& b) { return product({a, b}); }
inline Domain operator+(const Domain& a, const Domain& b) { return join({a, b}); }

/// Convenience: materialize a full iteration.
ValueList collect_all(const Domain& d);

}  // namespace canonforge
