#include "canonforge/pipeline.hpp"

#include <stdexcept>
#include <utility>

#include "canonforge/cnfs.hpp"
#include "domain_impl.hpp"
#include "pipeline_exec.hpp"

namespace canonforge {

namespace {

class GenerateSource final : public ValueIter {
 public:
  GenerateSource(Domain d, std::uint64_t n, std::uint64_t seed)
      : d_(std::move(d)), rng_(seed), left_(n) {}

  std::optional<Value> next() override {
    if (left_ == 0) return std::nullopt;
    --left_;
    return d_.sample(rng_);
  }

 private:
  Domain d_;
  Rng rng_;
  std::uint64_t left_;
};

}  // namespace

Value checked_fold(const ReduceFn& fold, const Value& acc, const Value& v) {
  try {
    return fold(acc, v);
  } catch (const TransformError&) {
    throw;
  } catch (const std::exception& e) {
    throw TransformError("reduce failed on " + v.str() + ": " + e.what());
  }
}

std::optional<Value> TransformStream::pull(std::size_t n) {
  if (n == 0) return src_->next();
  const Transform& t = ts_[n - 1];
  if (const auto* m = std::get_if<MapT>(&t)) {
    auto v = pull(n - 1);
    if (!v) return std::nullopt;
    return apply_map_fn(m->fn, m->label, *v);
  }
  if (const auto* f = std::get_if<FilterT>(&t)) {
    while (auto v = pull(n - 1))
      if (apply_pred_fn(f->pred, f->label, *v)) return v;
    return std::nullopt;
  }
  const auto& tk = std::get<TakeT>(t);
  if (taken_[n - 1] >= tk.k) return std::nullopt;
  auto v = pull(n - 1);
  if (v) ++taken_[n - 1];
  return v;
}

RunResult run_action(TransformStream& s, const Action& a) {
  switch (a.kind) {
    case ActionKind::Collect: {
      ValueList out;
      while (auto v = s.next()) out.push_back(std::move(*v));
      return out;
    }
    case ActionKind::Count: {
      std::uint64_t n = 0;
      while (s.next()) ++n;
      return n;
    }
    case ActionKind::First:
      return RunResult(std::optional<Value>(s.next()));
    case ActionKind::Reduce: {
      std::optional<Value> acc = a.init;
      while (auto v = s.next()) {
        if (!acc) {
          acc = std::move(*v);
          continue;
        }
        acc = checked_fold(a.fold, *acc, *v);
      }
      if (!acc)
        throw EngineError("reduce on an empty stream needs an initial value");
      return *acc;
    }
    case ActionKind::Max: {
      ValueList best;
      std::optional<Value> best_key;
      while (auto v = s.next()) {
        Value k = a.key ? apply_map_fn(a.key, "max.key", *v) : *v;
        if (!best_key || k > *best_key) {
          best_key = std::move(k);
          best.clear();
          best.push_back(std::move(*v));
        } else if (k == *best_key && (!a.cap || best.size() < *a.cap)) {
          best.push_back(std::move(*v));
        }
      }
      if (a.cap && best.size() > *a.cap)
        best.resize(static_cast<std::size_t>(*a.cap));
      return best;
    }
  }
  throw EngineError("unknown pipeline action");
}

Pipeline Pipeline::with_transform(Transform t) const {
  Pipeline p = *this;
  p.transforms_.push_back(std::move(t));
  return p;
}

Pipeline Pipeline::with_action(Action a) const {
  Pipeline p = *this;
  p.action_ = std::move(a);
  return p;
}

Pipeline Pipeline::map(MapFn f, std::string label) const {
  return with_transform(MapT{std::move(f), std::move(label)});
}

Pipeline Pipeline::filter(PredFn pred, std::string label) const {
  return with_transform(FilterT{std::move(pred), std::move(label)});
}

Pipeline Pipeline::take(std::uint64_t k) const { return with_transform(TakeT{k}); }

Pipeline Pipeline::collect() const { return with_action(Action{}); }

Pipeline Pipeline::reduce(ReduceFn f) const {
  Action a;
  a.kind = ActionKind::Reduce;
  a.fold = std::move(f);
  return with_action(std::move(a));
}

Pipeline Pipeline::reduce(ReduceFn f, Value init) const {
  Action a;
  a.kind = ActionKind::Reduce;
  a.fold = std::move(f);
  a.init = std::move(init);
  return with_action(std::move(a));
}

Pipeline Pipeline::max() const {
  Action a;
  a.kind = ActionKind::Max;
  return with_action(std::move(a));
}

Pipeline Pipeline::max(KeyFn key, std::optional<std::uint64_t> cap) const {
  Action a;
  a.kind = ActionKind::Max;
  a.key = std::move(key);
  a.cap = cap;
  return with_action(std::move(a));
}

Pipeline Pipeline::max_size(std::uint64_t cap) const {
  Action a;
  a.kind = ActionKind::Max;
  a.cap = cap;
  return with_action(std::move(a));
}

Pipeline Pipeline::count() const {
  Action a;
  a.kind = ActionKind::Count;
  return with_action(std::move(a));
}

Pipeline Pipeline::first() const {
  Action a;
  a.kind = ActionKind::First;
  return with_action(std::move(a));
}

Pipeline Pipeline::seeded(std::uint64_t seed) const {
  Pipeline p = *this;
  p.seed_ = seed;
  return p;
}

ValueIterPtr Pipeline::source_iter() const {
  switch (method_) {
    case Method::Iterate:
      return domain_.iter();
    case Method::Cnfs:
      return cnfs_iter(domain_);
    case Method::Generate:
      return std::make_unique<GenerateSource>(domain_, generate_n_, seed_);
  }
  throw EngineError("unknown pipeline method");
}

RunResult Pipeline::run() const {
  TransformStream s(source_iter(), transforms_);
  return run_action(s, action_);
}

Pipeline Domain::iterate() const { return Pipeline(*this); }

Pipeline Domain::generate(std::uint64_t count) const {
  return Pipeline(*this, Method::Generate, count);
}

Pipeline Domain::cnfs() const { return Pipeline(*this, Method::Cnfs); }

}  // namespace canonforge
