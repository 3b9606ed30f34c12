#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "canonforge/domain.hpp"

namespace canonforge {

class PoolContext;

enum class Method { Iterate, Generate, Cnfs };
enum class ActionKind { Collect, Reduce, Max, Count, First };

using ReduceFn = std::function<Value(const Value&, const Value&)>;
using KeyFn = std::function<Value(const Value&)>;

struct MapT {
  MapFn fn;
  std::string label = "fn";
};
struct FilterT {
  PredFn pred;
  std::string label = "pred";
};
struct TakeT {
  std::uint64_t k = 0;
};
using Transform = std::variant<MapT, FilterT, TakeT>;

struct Action {
  ActionKind kind = ActionKind::Collect;
  ReduceFn fold;                     // Reduce
  std::optional<Value> init;         // Reduce
  KeyFn key;                         // Max; null compares elements directly
  std::optional<std::uint64_t> cap;  // Max result-size cap
};

/// Collect and Max yield a list, Reduce a value, Count an integer, First an
/// optional value.
using RunResult =
    std::variant<ValueList, Value, std::uint64_t, std::optional<Value>>;

/// Immutable computation graph: a source method over a domain, an ordered
/// chain of stream transformations, and one terminal action. Every builder
/// returns a new pipeline; running never mutates, so pipelines are freely
/// shareable. Defaults: Iterate source, Collect action. Transform, key and
/// fold functions must be effect-free (documented contract, not enforced).
class Pipeline {
 public:
  explicit Pipeline(Domain d, Method m = Method::Iterate, std::uint64_t n = 0)
      : domain_(std::move(d)), method_(m), generate_n_(n) {}

  Pipeline map(MapFn f, std::string label = "fn") const;
  Pipeline filter(PredFn pred, std::string label = "pred") const;
  /// Truncates the stream at this point after k elements, evaluating at
  /// most k upstream elements — also under parallel execution.
  Pipeline take(std::uint64_t k) const;

  Pipeline collect() const;
  /// Left fold; on an empty stream the init value is required.
  Pipeline reduce(ReduceFn f) const;
  Pipeline reduce(ReduceFn f, Value init) const;
  /// All maximal elements in stream order (by key when given); cap limits
  /// how many tied maxima are kept.
  Pipeline max() const;
  Pipeline max(KeyFn key, std::optional<std::uint64_t> cap = std::nullopt) const;
  Pipeline max_size(std::uint64_t cap) const;
  Pipeline count() const;
  Pipeline first() const;

  /// Fixes the random stream of a Generate source (default seed is a
  /// constant, so unseeded runs are reproducible too).
  Pipeline seeded(std::uint64_t seed) const;

  /// Serial in-process execution.
  RunResult run() const;
  /// Execution on a worker pool; Iterate/Cnfs results are observably equal
  /// to the serial run, Generate depends on the worker count (seeds are
  /// derived per chunk).
  RunResult run(PoolContext& pool) const;

  ValueList run_list() const { return std::get<ValueList>(run()); }
  std::uint64_t run_count() const { return std::get<std::uint64_t>(run()); }
  Value run_value() const { return std::get<Value>(run()); }
  std::optional<Value> run_first() const {
    return std::get<std::optional<Value>>(run());
  }
  ValueList run_list(PoolContext& p) const { return std::get<ValueList>(run(p)); }
  std::uint64_t run_count(PoolContext& p) const {
    return std::get<std::uint64_t>(run(p));
  }
  Value run_value(PoolContext& p) const { return std::get<Value>(run(p)); }
  std::optional<Value> run_first(PoolContext& p) const {
    return std::get<std::optional<Value>>(run(p));
  }

  const Domain& domain() const { return domain_; }
  Method method() const { return method_; }
  std::uint64_t generate_count() const { return generate_n_; }
  const std::vector<Transform>& transforms() const { return transforms_; }
  const Action& action() const { return action_; }
  std::uint64_t seed() const { return seed_; }

  /// Fresh source iterator for this pipeline's method (used by execution
  /// contexts; Generate draws from the pipeline's seed).
  ValueIterPtr source_iter() const;

 private:
  Pipeline with_transform(Transform t) const;
  Pipeline with_action(Action a) const;

  Domain domain_;
  Method method_;
  std::uint64_t generate_n_ = 0;
  std::uint64_t seed_ = 0x9e3779b97f4a7c15ull;
  std::vector<Transform> transforms_;
  Action action_;
};

}  // namespace canonforge
