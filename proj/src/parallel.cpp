#include "canonforge/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>
#include <variant>

#include "canonforge/errors.hpp"
#include "pipeline_exec.hpp"

namespace canonforge {

namespace {

const char* strategy_name(SliceStrategy s) {
  switch (s) {
    case SliceStrategy::Full:
      return "full";
    case SliceStrategy::Filtered:
      return "filtered";
    case SliceStrategy::Fallback:
      return "fallback";
    case SliceStrategy::Generate:
      return "generate";
  }
  return "?";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Sliced domain iterator as a plain value source; counts delivered elements
/// and skipped positions into the job's stats.
class SliceSource final : public ValueIter {
 public:
  SliceSource(SignalIterPtr src, JobStats* stats)
      : src_(std::move(src)), stats_(stats) {}

  std::optional<Value> next() override {
    while (auto sig = src_->next()) {
      if (const auto* sk = std::get_if<Skipped>(&*sig)) {
        stats_->skipped += sk->count;
        continue;
      }
      ++stats_->produced;
      return std::move(std::get<Value>(*sig));
    }
    return std::nullopt;
  }

 private:
  SignalIterPtr src_;
  JobStats* stats_;
};

class SeededSamples final : public ValueIter {
 public:
  SeededSamples(Domain d, std::uint64_t n, std::uint64_t seed)
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

/// What a worker runs on its slice after the head transforms.
enum class JobMode { Collect, CollectCapped, Count, FoldPartial, MaxPartial };

struct Partial {
  ValueList list;
  std::uint64_t count = 0;
  std::optional<Value> folded;
};

struct JobOutcome {
  std::size_t id = 0;
  Partial partial;
  JobStats stats;
  std::exception_ptr error;
};

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<JobOutcome> done;

  void push(JobOutcome o) {
    {
      std::lock_guard lk(mu);
      done.push_back(std::move(o));
    }
    cv.notify_one();
  }

  JobOutcome wait_pop() {
    std::unique_lock lk(mu);
    cv.wait(lk, [&] { return !done.empty(); });
    JobOutcome o = std::move(done.front());
    done.pop_front();
    return o;
  }
};

/// Everything a job needs, shared by all workers of one execute(). Owns the
/// mailbox so late results from an abandoned run cannot dangle.
struct ExecShared {
  Domain domain;
  std::vector<Transform> head;  // transforms before the first take
  JobMode mode = JobMode::Collect;
  std::uint64_t cap = 0;  // CollectCapped bound
  Action action;          // FoldPartial / MaxPartial
  Mailbox mailbox;

  ExecShared(Domain d, std::vector<Transform> h)
      : domain(std::move(d)), head(std::move(h)) {}
};

ValueIterPtr make_source(const ExecShared& cx, const SliceJob& job,
                         JobStats& stats) {
  switch (job.strategy) {
    case SliceStrategy::Full:
    case SliceStrategy::Filtered:
      return std::make_unique<SliceSource>(cx.domain.slice(job.offset, job.span),
                                           &stats);
    case SliceStrategy::Fallback:
      stats.produced = job.batch.size();
      return std::make_unique<ListSource>(job.batch);
    case SliceStrategy::Generate:
      stats.produced = job.span;
      return std::make_unique<SeededSamples>(cx.domain, job.span, job.seed);
  }
  throw EngineError("unknown slice strategy");
}

Partial run_mode(TransformStream& ts, const ExecShared& cx) {
  Partial out;
  switch (cx.mode) {
    case JobMode::Collect:
      while (auto v = ts.next()) out.list.push_back(std::move(*v));
      break;
    case JobMode::CollectCapped:
      while (out.list.size() < cx.cap) {
        auto v = ts.next();
        if (!v) break;
        out.list.push_back(std::move(*v));
      }
      break;
    case JobMode::Count:
      while (ts.next()) ++out.count;
      break;
    case JobMode::FoldPartial:
      // No initial value here: the combine step folds the partials onto it,
      // which is why the fold must be associative.
      while (auto v = ts.next()) {
        if (!out.folded)
          out.folded = std::move(*v);
        else
          out.folded = checked_fold(cx.action.fold, *out.folded, *v);
      }
      break;
    case JobMode::MaxPartial: {
      RunResult r = run_action(ts, cx.action);
      out.list = std::get<ValueList>(std::move(r));
      break;
    }
  }
  return out;
}

}  // namespace

std::string SliceJob::describe() const {
  std::ostringstream os;
  os << "{\"strategy\":\"" << strategy_name(strategy) << "\",\"offset\":" << offset
     << ",\"span\":" << span << ",\"seed\":" << seed
     << ",\"batch\":" << batch.size() << "}";
  return os.str();
}

std::uint64_t plan_span(const PoolOptions& opts, std::span<const JobStats> recent) {
  const std::uint64_t lo = std::min(opts.min_span, opts.max_span);
  const std::uint64_t hi = std::max(opts.min_span, opts.max_span);
  if (recent.empty()) return std::clamp(opts.initial_span, lo, hi);
  double wall = 0.0;
  double span = 0.0;
  for (const JobStats& s : recent) {
    wall += s.wall_ms;
    span += static_cast<double>(s.span);
  }
  if (span <= 0.0) return std::clamp(opts.initial_span, lo, hi);
  const double per_position = wall / span;
  if (per_position <= 0.0) return hi;  // too fast to measure
  const double want = static_cast<double>(opts.target_job_ms) / per_position;
  if (want >= static_cast<double>(hi)) return hi;
  return std::clamp(static_cast<std::uint64_t>(want), lo, hi);
}

struct PoolContext::Impl {
  PoolOptions opts;
  std::vector<std::thread> threads;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::function<void()>> tasks;
  bool stop = false;
  std::vector<JobStats> stats;   // last run, offset order
  std::vector<SliceJob> jobs;    // last run, offset order

  explicit Impl(PoolOptions o) : opts(o) {
    if (opts.workers == 0)
      throw EngineError("parallel execution needs at least one worker");
    threads.reserve(opts.workers);
    for (std::uint32_t i = 0; i < opts.workers; ++i)
      threads.emplace_back([this] { worker_loop(); });
  }

  ~Impl() {
    {
      std::lock_guard lk(mu);
      stop = true;
    }
    cv.notify_all();
    for (std::thread& t : threads) t.join();
  }

  void worker_loop() {
    while (true) {
      std::function<void()> task;
      {
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return stop || !tasks.empty(); });
        if (tasks.empty()) return;  // stop requested and queue drained
        task = std::move(tasks.front());
        tasks.pop_front();
      }
      task();
    }
  }

  void submit(std::function<void()> task) {
    {
      std::lock_guard lk(mu);
      tasks.push_back(std::move(task));
    }
    cv.notify_one();
  }
};

PoolContext::PoolContext(PoolOptions opts)
    : impl_(std::make_unique<Impl>(opts)) {}

PoolContext::~PoolContext() = default;

const PoolOptions& PoolContext::options() const { return impl_->opts; }

const std::vector<JobStats>& PoolContext::last_run_stats() const {
  return impl_->stats;
}

const std::vector<SliceJob>& PoolContext::last_run_jobs() const {
  return impl_->jobs;
}

RunResult PoolContext::execute(const Pipeline& p) {
  Impl& pool = *impl_;
  pool.stats.clear();
  pool.jobs.clear();

  // Split the transform chain at the first take. The head (maps and filters
  // only) runs inside jobs; because it is take-free, each job's output is
  // exactly the serial stream restricted to the job's positions, so the
  // offset-ordered concatenation equals the serial stream. The tail —
  // starting with that take — then runs serially over the merge.
  const std::span<const Transform> ts = p.transforms();
  std::size_t cut = ts.size();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (std::holds_alternative<TakeT>(ts[i])) {
      cut = i;
      break;
    }
  }
  std::vector<Transform> tail(ts.begin() + static_cast<std::ptrdiff_t>(cut),
                              ts.end());
  auto cx = std::make_shared<ExecShared>(
      p.domain(),
      std::vector<Transform>(ts.begin(),
                             ts.begin() + static_cast<std::ptrdiff_t>(cut)));

  const Action& final_action = p.action();
  const bool has_tail = !tail.empty();
  if (has_tail) {
    // A job never needs more than the first take's quota: an element cut by
    // the per-job cap has that many same-job predecessors, all earlier in
    // the merged stream, so it cannot be inside the global take prefix.
    cx->mode = JobMode::CollectCapped;
    cx->cap = std::get<TakeT>(ts[cut]).k;
  } else {
    switch (final_action.kind) {
      case ActionKind::Collect:
        cx->mode = JobMode::Collect;
        break;
      case ActionKind::Count:
        cx->mode = JobMode::Count;
        break;
      case ActionKind::First:
        cx->mode = JobMode::CollectCapped;
        cx->cap = 1;
        break;
      case ActionKind::Reduce:
        cx->mode = JobMode::FoldPartial;
        cx->action = final_action;
        break;
      case ActionKind::Max:
        // Per-job maxima (cap included) are safe for the same prefix reason.
        cx->mode = JobMode::MaxPartial;
        cx->action = final_action;
        break;
    }
  }

  SliceStrategy strat = SliceStrategy::Fallback;
  if (p.method() == Method::Generate) {
    strat = SliceStrategy::Generate;
  } else if (p.method() == Method::Cnfs) {
    strat = SliceStrategy::Fallback;
  } else {
    switch (p.domain().capability()) {
      case Slicing::Full:
        strat = SliceStrategy::Full;
        break;
      case Slicing::Filtered:
        strat = SliceStrategy::Filtered;
        break;
      case Slicing::None:
        strat = SliceStrategy::Fallback;
        break;
    }
  }

  // Per-strategy job producer. Returns nullopt when the work is exhausted.
  std::uint64_t pos = 0;
  std::size_t produced_jobs = 0;
  std::vector<JobStats> window;  // recent stats the planner sees
  std::function<std::optional<SliceJob>()> produce_next;

  ValueIterPtr fallback_src;
  bool fallback_done = false;
  switch (strat) {
    case SliceStrategy::Full:
    case SliceStrategy::Filtered: {
      std::optional<std::uint64_t> total = p.domain().span();
      if (!total) throw EngineError("sliceable domain reports no span");
      produce_next = [&, total = *total]() -> std::optional<SliceJob> {
        if (pos >= total) return std::nullopt;
        std::uint64_t s = std::min(plan_span(pool.opts, window), total - pos);
        SliceJob j{strat, pos, s, 0, {}};
        pos += s;
        return j;
      };
      break;
    }
    case SliceStrategy::Fallback: {
      // The coordinator pulls the source itself and ships batches; order of
      // results follows batch order, so collect stays deterministic even
      // though the source cannot be sliced.
      fallback_src = p.source_iter();
      produce_next = [&]() -> std::optional<SliceJob> {
        if (fallback_done) return std::nullopt;
        const std::uint64_t want = plan_span(pool.opts, window);
        ValueList batch;
        while (batch.size() < want) {
          auto v = fallback_src->next();
          if (!v) {
            fallback_done = true;
            break;
          }
          batch.push_back(std::move(*v));
        }
        if (batch.empty()) return std::nullopt;
        SliceJob j{strat, pos, batch.size(), 0, std::move(batch)};
        pos += j.span;
        return j;
      };
      break;
    }
    case SliceStrategy::Generate: {
      // Deterministic chunking: the chunk size depends only on the options
      // and worker count, never on timing, and each chunk's seed is derived
      // from the pipeline seed and the chunk index. A fixed worker count
      // therefore reproduces the same samples (they differ from the serial
      // single-stream draw).
      const std::uint64_t total = p.generate_count();
      const std::uint64_t lanes =
          std::max<std::uint64_t>(1, std::uint64_t{pool.opts.workers} * 4);
      const std::uint64_t chunk = std::clamp<std::uint64_t>(
          (total + lanes - 1) / lanes, 1, std::max<std::uint64_t>(1, pool.opts.initial_span));
      produce_next = [&, total, chunk,
                      base = p.seed()]() -> std::optional<SliceJob> {
        if (pos >= total) return std::nullopt;
        std::uint64_t s = std::min(chunk, total - pos);
        std::uint64_t chunk_seed =
            splitmix64(splitmix64(base + produced_jobs) ^ pool.opts.seed);
        SliceJob j{strat, pos, s, chunk_seed, {}};
        pos += s;
        return j;
      };
      break;
    }
  }

  std::vector<SliceJob> descriptors;          // by job id
  std::vector<std::optional<JobOutcome>> outcomes;  // by job id
  std::map<std::size_t, int> attempts;
  std::size_t in_flight = 0;
  bool stop_submitting = false;
  bool source_exhausted = false;
  std::optional<std::pair<std::size_t, std::string>> failure;  // id + what

  // Under a cap (take head or first), completed jobs collectively holding
  // cap elements already cover the merged stream's cap-prefix: everything a
  // not-yet-submitted job could add sits after them in merge order. So stop
  // scheduling — essential for capped runs over unsliceable sources, whose
  // batches would otherwise drain the entire stream.
  std::uint64_t capped_done = 0;
  auto enough_output = [&] {
    return cx->mode == JobMode::CollectCapped && capped_done >= cx->cap;
  };

  const auto t_start = std::chrono::steady_clock::now();
  auto past_deadline = [&] {
    if (!pool.opts.deadline_ms) return false;
    const double elapsed = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
    return elapsed > *pool.opts.deadline_ms;
  };

  auto dispatch = [&](std::size_t id, SliceJob job) {
    pool.submit([cx, id, job = std::move(job)]() {
      JobOutcome out;
      out.id = id;
      out.stats.span = job.span;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TransformStream stream(make_source(*cx, job, out.stats), cx->head);
        out.partial = run_mode(stream, *cx);
      } catch (...) {
        out.error = std::current_exception();
      }
      out.stats.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
      cx->mailbox.push(std::move(out));
    });
  };

  while (true) {
    while (!stop_submitting && !source_exhausted && !enough_output() &&
           in_flight < pool.opts.workers) {
      if (past_deadline()) {
        // Soft deadline: stop scheduling new spans, let running jobs finish
        // and combine what completed.
        stop_submitting = true;
        break;
      }
      std::optional<SliceJob> j = produce_next();
      if (!j) {
        source_exhausted = true;
        break;
      }
      const std::size_t id = produced_jobs++;
      descriptors.push_back(*j);
      outcomes.emplace_back();
      dispatch(id, std::move(*j));
      ++in_flight;
    }
    if (in_flight == 0) break;

    JobOutcome o = cx->mailbox.wait_pop();
    --in_flight;
    if (o.error) {
      int& tried = attempts[o.id];
      if (tried == 0 && !failure) {
        tried = 1;
        dispatch(o.id, descriptors[o.id]);  // one retry of the same job
        ++in_flight;
      } else if (!failure) {
        std::string what = "unknown error";
        try {
          std::rethrow_exception(o.error);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        failure = {o.id, std::move(what)};
        stop_submitting = true;  // drain what is in flight, then raise
      }
    } else {
      window.push_back(o.stats);
      if (window.size() > 8) window.erase(window.begin());
      if (cx->mode == JobMode::CollectCapped) capped_done += o.partial.list.size();
      outcomes[o.id] = std::move(o);
    }
  }

  if (failure) {
    throw IncompleteExecutionError("job " + descriptors[failure->first].describe() +
                                   " failed twice: " + failure->second);
  }

  for (std::size_t id = 0; id < outcomes.size(); ++id) {
    pool.stats.push_back(outcomes[id]->stats);
    pool.jobs.push_back(descriptors[id]);
  }

  // Combine in job (= offset) order.
  if (has_tail) {
    ValueList merged;
    for (auto& o : outcomes)
      for (Value& v : o->partial.list) merged.push_back(std::move(v));
    TransformStream stream(std::make_unique<ListSource>(std::move(merged)), tail);
    return run_action(stream, final_action);
  }
  switch (final_action.kind) {
    case ActionKind::Collect: {
      ValueList all;
      for (auto& o : outcomes)
        for (Value& v : o->partial.list) all.push_back(std::move(v));
      return all;
    }
    case ActionKind::Count: {
      std::uint64_t n = 0;
      for (auto& o : outcomes) n += o->partial.count;
      return n;
    }
    case ActionKind::First: {
      for (auto& o : outcomes)
        if (!o->partial.list.empty())
          return RunResult(std::optional<Value>(std::move(o->partial.list.front())));
      return RunResult(std::optional<Value>());
    }
    case ActionKind::Reduce: {
      std::optional<Value> acc = final_action.init;
      for (auto& o : outcomes) {
        if (!o->partial.folded) continue;
        acc = acc ? checked_fold(final_action.fold, *acc, *o->partial.folded)
                  : std::move(o->partial.folded);
      }
      if (!acc)
        throw EngineError("reduce on an empty stream needs an initial value");
      return *acc;
    }
    case ActionKind::Max: {
      ValueList all;
      for (auto& o : outcomes)
        for (Value& v : o->partial.list) all.push_back(std::move(v));
      TransformStream stream(std::make_unique<ListSource>(std::move(all)), {});
      return run_action(stream, final_action);
    }
  }
  throw EngineError("unknown pipeline action");
}

RunResult Pipeline::run(PoolContext& pool) const { return pool.execute(*this); }

}  // namespace canonforge
