#pragma once

#include <optional>
#include <span>
#include <vector>

#include "canonforge/pipeline.hpp"

namespace canonforge {

/// Pull-based evaluator of a transform chain over a source iterator. Each
/// next() lazily pulls exactly the upstream elements it needs, so a take(k)
/// stage never evaluates more than k elements upstream of it.
class TransformStream {
 public:
  TransformStream(ValueIterPtr src, std::span<const Transform> ts)
      : src_(std::move(src)), ts_(ts), taken_(ts.size(), 0) {}

  std::optional<Value> next() { return pull(ts_.size()); }

 private:
  std::optional<Value> pull(std::size_t n);

  ValueIterPtr src_;
  std::span<const Transform> ts_;
  std::vector<std::uint64_t> taken_;
};

/// Drains the stream into the action's result.
RunResult run_action(TransformStream& s, const Action& a);

/// One fold step with the element rendered into any failure.
Value checked_fold(const ReduceFn& fold, const Value& acc, const Value& v);

/// Source over a materialized list (parallel fallback batches).
class ListSource final : public ValueIter {
 public:
  explicit ListSource(ValueList items) : items_(std::move(items)) {}
  std::optional<Value> next() override {
    if (i_ == items_.size()) return std::nullopt;
    return std::move(items_[i_++]);
  }

 private:
  ValueList items_;
  std::size_t i_ = 0;
};

}  // namespace canonforge
