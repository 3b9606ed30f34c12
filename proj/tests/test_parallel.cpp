#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "canonforge/cnfs.hpp"
#include "canonforge/domain.hpp"
#include "canonforge/errors.hpp"
#include "canonforge/parallel.hpp"
#include "canonforge/pipeline.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace canonforge;
using namespace testkit;

namespace {

PoolOptions fixed_spans(std::uint64_t span, std::uint32_t workers) {
  PoolOptions o;
  o.workers = workers;
  o.initial_span = span;
  o.min_span = span;
  o.max_span = span;
  return o;
}

JobStats stat(std::uint64_t span, double wall_ms) {
  JobStats s;
  s.span = span;
  s.wall_ms = wall_ms;
  return s;
}

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("planner sizes jobs toward the target wall time") {
  PoolOptions o;  // target 100 ms, spans clamped to [16, 1048576]

  // no history: the configured initial span
  CHECK(plan_span(o, {}) == 1024);

  // one millisecond per position at a 500 ms target: 500 positions
  o.target_job_ms = 500;
  std::vector<JobStats> recent = {stat(100, 100.0)};
  CHECK(plan_span(o, recent) == 500);

  // twice as slow per position: half the span
  recent = {stat(100, 200.0)};
  CHECK(plan_span(o, recent) == 250);

  // clamped on both ends
  recent = {stat(10, 1e9)};
  CHECK(plan_span(o, recent) == o.min_span);
  recent = {stat(1000000, 0.0001)};
  CHECK(plan_span(o, recent) == o.max_span);

  // a zero-wall window means "too fast to measure": take the biggest bite
  recent = {stat(512, 0.0)};
  CHECK(plan_span(o, recent) == o.max_span);

  // the window is averaged position-weighted
  std::vector<JobStats> mixed = {stat(100, 100.0), stat(300, 300.0)};
  CHECK(plan_span(o, mixed) == 500);

  // slower recent jobs never plan a larger span
  std::uint64_t prev = ~0ull;
  for (double wall : {1.0, 2.0, 5.0, 50.0, 500.0, 5000.0}) {
    recent = {stat(100, wall)};
    const std::uint64_t s = plan_span(o, recent);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("full slicing partitions the position space exactly") {
  Domain d = range_domain(5) * range_domain(3);  // 15 positions
  PoolContext pool(fixed_spans(4, 2));
  CHECK(Pipeline(d).count().run_count(pool) == 15);

  const auto& jobs = pool.last_run_jobs();
  REQUIRE(jobs.size() == 4);
  std::vector<std::uint64_t> spans;
  std::vector<std::uint64_t> offsets;
  for (const SliceJob& j : jobs) {
    CHECK(j.strategy == SliceStrategy::Full);
    spans.push_back(j.span);
    offsets.push_back(j.offset);
  }
  CHECK(spans == std::vector<std::uint64_t>{4, 4, 4, 3});
  CHECK(offsets == std::vector<std::uint64_t>{0, 4, 8, 12});

  // partial counts summed: 4 + 4 + 4 + 3
  std::uint64_t covered = 0;
  for (const JobStats& s : pool.last_run_stats()) covered += s.produced;
  CHECK(covered == 15);
}

TEST_CASE("parallel collect equals the serial stream for every worker count") {
  Domain d = range_domain(5) * range_domain(3);
  const ValueList serial = Pipeline(d).run_list();
  for (std::uint32_t w : {1u, 2u, 4u, 8u}) {
    PoolContext pool(fixed_spans(4, w));
    CHECK(Pipeline(d).run_list(pool) == serial);
  }
}

TEST_CASE("head transforms run inside the jobs and keep stream order") {
  Domain d = range_domain(40);
  auto dbl = [](const Value& v) { return vi(v.as_int() * 2); };
  auto big = [](const Value& v) { return v.as_int() > 30; };
  Pipeline p = Pipeline(d).map(dbl).filter(big);
  const ValueList serial = p.run_list();
  REQUIRE(serial.size() == 24);
  for (std::uint32_t w : {1u, 2u, 4u}) {
    PoolContext pool(fixed_spans(7, w));
    CHECK(p.run_list(pool) == serial);
  }
}

TEST_CASE("filtered slicing reports skips and conserves positions") {
  Domain base = range_domain(8) * range_domain(8);
  Domain d = filter_domain(
      base, [](const Value& v) { return v.items()[0] != v.items()[1]; },
      "offdiag");
  REQUIRE(d.capability() == Slicing::Filtered);

  const ValueList serial = Pipeline(d).run_list();
  CHECK(serial.size() == 56);

  PoolContext pool(fixed_spans(16, 3));
  CHECK(Pipeline(d).run_list(pool) == serial);

  const auto& jobs = pool.last_run_jobs();
  const auto& stats = pool.last_run_stats();
  REQUIRE(jobs.size() == 4);
  REQUIRE(stats.size() == jobs.size());
  std::uint64_t produced = 0;
  std::uint64_t spanned = 0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    CHECK(jobs[i].strategy == SliceStrategy::Filtered);
    CHECK(stats[i].produced + stats[i].skipped == stats[i].span);
    produced += stats[i].produced;
    spanned += stats[i].span;
  }
  CHECK(spanned == 64);
  CHECK(produced == 56);
}

TEST_CASE("canonical-form sources fall back to coordinator batches") {
  Uset n(2, "n");
  Domain node = uset_domain(n);
  Domain graphs = subsets(node * node);
  const ValueList serial = graphs.cnfs().run_list();
  REQUIRE(serial.size() == 10);
  for (std::uint32_t w : {1u, 2u, 4u}) {
    PoolContext pool(fixed_spans(3, w));
    // batches ship in order, so even the fallback keeps the exact sequence
    CHECK(graphs.cnfs().run_list(pool) == serial);
    for (const SliceJob& j : pool.last_run_jobs())
      CHECK(j.strategy == SliceStrategy::Fallback);
    CHECK(pool.last_run_jobs().size() == 4);  // 3 + 3 + 3 + 1
  }
}

TEST_CASE("position spaces beyond 64 bits refuse iteration the same way everywhere") {
  Domain big = subsets(range_domain(70));  // 2^70 positions: no 64-bit span
  REQUIRE(big.capability() == Slicing::None);
  REQUIRE(!big.span());
  PoolContext pool(fixed_spans(16, 2));
  CHECK_THROWS_AS(big.iterate().run_list(), UnsupportedSlicingError);
  CHECK_THROWS_AS(big.iterate().run_list(pool), UnsupportedSlicingError);
}

TEST_CASE("canonical forms of unsliceable domains still stream in batches") {
  Uset n(9, "n");
  Domain node = uset_domain(n);
  Domain graphs = subsets(node * node);  // 2^81 positions: no 64-bit span
  REQUIRE(graphs.capability() == Slicing::None);
  const ValueList serial = graphs.cnfs().take(12).run_list();
  REQUIRE(serial.size() == 12);
  PoolContext pool(fixed_spans(16, 2));
  CHECK(graphs.cnfs().take(12).run_list(pool) == serial);
  REQUIRE(!pool.last_run_jobs().empty());
  CHECK(pool.last_run_jobs().front().strategy == SliceStrategy::Fallback);
}

TEST_CASE("a take splits the chain: jobs are capped, the tail reruns serially") {
  Domain d = range_domain(1000);
  auto dbl = [](const Value& v) { return vi(v.as_int() * 2); };
  Pipeline p = Pipeline(d).map(dbl).take(7);
  const ValueList serial = p.run_list();
  for (std::uint32_t w : {1u, 2u, 4u}) {
    PoolContext pool(fixed_spans(64, w));
    CHECK(p.run_list(pool) == serial);
    // each job stopped pulling at the take quota ...
    for (const JobStats& s : pool.last_run_stats()) CHECK(s.produced <= 7);
    // ... and completed quota stopped the scheduling
    CHECK(pool.last_run_jobs().size() <= w);
  }

  // filters ahead of the take drop elements inside the jobs
  auto odd = [](const Value& v) { return v.as_int() % 2 == 1; };
  Pipeline q = Pipeline(d).filter(odd).take(5);
  PoolContext pool(fixed_spans(64, 2));
  CHECK(q.run_list(pool) == q.run_list());

  // a zero take schedules nothing at all
  PoolContext pool0(fixed_spans(64, 2));
  CHECK(Pipeline(d).take(0).run_list(pool0).empty());
  CHECK(pool0.last_run_jobs().empty());

  // transforms after the take run serially on the merged prefix
  Pipeline r = Pipeline(d).take(10).map(dbl);
  PoolContext pool2(fixed_spans(64, 2));
  CHECK(r.run_list(pool2) == r.run_list());
}

TEST_CASE("count sums the partial counts") {
  Domain d = range_domain(5) * range_domain(3);
  for (std::uint32_t w : {1u, 2u, 4u, 8u}) {
    PoolContext pool(fixed_spans(4, w));
    CHECK(Pipeline(d).count().run_count(pool) == 15);
  }
}

TEST_CASE("reduce folds job partials in offset order") {
  Domain d = values_domain({vi(1), vi(2), vi(3), vi(4)});
  auto add = [](const Value& a, const Value& b) {
    return vi(a.as_int() + b.as_int());
  };
  PoolContext pool(fixed_spans(3, 2));  // partials: 1+2+3 = 6 and 4
  CHECK(Pipeline(d).reduce(add).run_value(pool) == vi(10));
  CHECK(Pipeline(d).reduce(add, vi(100)).run_value(pool) == vi(110));

  // an empty stream still needs its initial value
  Domain none = filter_domain(range_domain(10),
                              [](const Value&) { return false; }, "never");
  CHECK(Pipeline(none).reduce(add, vi(42)).run_value(pool) == vi(42));
  CHECK_THROWS_WITH_AS(Pipeline(none).reduce(add).run(pool),
                       doctest::Contains("initial value"), EngineError);
}

TEST_CASE("max merges tied partial maxima and re-caps") {
  Domain d = values_domain({tup({vi(4), vi(0)}), tup({vi(1), vi(0)}),
                            tup({vi(4), vi(1)}), tup({vi(4), vi(2)})});
  auto key = [](const Value& v) { return v.items()[0]; };

  // jobs [(4,0),(1,0)] and [(4,1),(4,2)]: both contribute tied maxima
  PoolContext pool(fixed_spans(2, 2));
  ValueList got = Pipeline(d).max(key).run_list(pool);
  const ValueList all3 = {tup({vi(4), vi(0)}), tup({vi(4), vi(1)}),
                          tup({vi(4), vi(2)})};
  CHECK(got == all3);

  // the size cap is re-applied after the merge
  CHECK(Pipeline(d).max(key, 2).run_list(pool) ==
        ValueList{tup({vi(4), vi(0)}), tup({vi(4), vi(1)})});

  // keyless max ranks whole values
  Domain plain = values_domain({vi(3), vi(1), vi(3)});
  PoolContext pool2(fixed_spans(2, 2));
  CHECK(Pipeline(plain).max().run_list(pool2) == ValueList{vi(3), vi(3)});
}

TEST_CASE("first returns the earliest hit across jobs") {
  Domain d = range_domain(100);
  auto late = [](const Value& v) { return v.as_int() >= 42; };
  for (std::uint32_t w : {1u, 2u, 4u}) {
    PoolContext pool(fixed_spans(10, w));
    auto got = Pipeline(d).filter(late).first().run_first(pool);
    REQUIRE(got.has_value());
    CHECK(*got == vi(42));

    auto none = Pipeline(d)
                    .filter([](const Value&) { return false; }, "never")
                    .first()
                    .run_first(pool);
    CHECK(!none.has_value());
  }
}

TEST_CASE("serial and parallel agree across actions and worker counts") {
  Domain base = range_domain(6) * range_domain(4);
  Domain filt = filter_domain(
      base, [](const Value& v) { return v.items()[0] != v.items()[1]; },
      "offdiag");
  auto key = [](const Value& v) { return v.items()[1]; };
  auto add = [](const Value& a, const Value& b) {
    return vi(a.as_int() + b.as_int());
  };
  auto second = [](const Value& v) { return v.items()[1]; };

  for (const Domain& d : {base, filt}) {
    Pipeline collect = Pipeline(d);
    Pipeline count = Pipeline(d).count();
    Pipeline maxed = Pipeline(d).max(key);
    Pipeline summed = Pipeline(d).map(second).reduce(add);
    Pipeline head = Pipeline(d).first();
    for (std::uint32_t w : {1u, 2u, 4u}) {
      PoolContext pool(fixed_spans(5, w));
      CHECK(collect.run_list(pool) == collect.run_list());
      CHECK(count.run_count(pool) == count.run_count());
      CHECK(maxed.run_list(pool) == maxed.run_list());
      CHECK(summed.run_value(pool) == summed.run_value());
      CHECK(head.run_first(pool) == head.run_first());
    }
  }
}

TEST_CASE("a failing job is retried once, then surfaces its descriptor") {
  Domain d = range_domain(100);
  auto boom = [](const Value& v) -> Value {
    if (v.as_int() == 37) throw std::runtime_error("explode");
    return v;
  };
  PoolContext pool(fixed_spans(10, 2));
  CHECK_THROWS_WITH_AS(Pipeline(d).map(boom, "boom").count().run_count(pool),
                       doctest::Contains("failed twice"),
                       IncompleteExecutionError);
  try {
    Pipeline(d).map(boom, "boom").count().run_count(pool);
    FAIL("expected IncompleteExecutionError");
  } catch (const IncompleteExecutionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("explode") != std::string::npos);
    // the embedded job descriptor is parseable JSON naming the failed slice
    const auto open = msg.find('{');
    const auto close = msg.find('}');
    REQUIRE(open != std::string::npos);
    REQUIRE(close != std::string::npos);
    auto j = nlohmann::json::parse(msg.substr(open, close - open + 1));
    CHECK(j["strategy"] == "full");
    CHECK(j["offset"].get<std::uint64_t>() == 30);
    CHECK(j["span"].get<std::uint64_t>() == 10);
  }

  // the pool stays usable after a failed run
  CHECK(Pipeline(d).count().run_count(pool) == 100);
}

TEST_CASE("one transient failure is absorbed by the retry") {
  Domain d = range_domain(50);
  auto tripped = std::make_shared<std::atomic<bool>>(false);
  auto flaky = [tripped](const Value& v) -> Value {
    if (v.as_int() == 17 && !tripped->exchange(true))
      throw std::runtime_error("transient");
    return v;
  };
  PoolContext pool(fixed_spans(10, 2));
  CHECK(Pipeline(d).map(flaky, "flaky").count().run_count(pool) == 50);
}

TEST_CASE("generate chunks are seeded deterministically per worker count") {
  Domain d = range_domain(1000);
  PoolContext pool(fixed_spans(8, 3));
  const ValueList a = d.generate(40).seeded(7).run_list(pool);
  CHECK(a.size() == 40);
  for (const SliceJob& j : pool.last_run_jobs())
    CHECK(j.strategy == SliceStrategy::Generate);
  const auto& jobs = pool.last_run_jobs();
  REQUIRE(jobs.size() >= 2);
  CHECK(jobs[0].seed != jobs[1].seed);  // chunk seeds derive per index

  // the same seed and pool shape reproduce the draw exactly
  CHECK(d.generate(40).seeded(7).run_list(pool) == a);

  // a different pipeline seed draws a different sample
  CHECK(d.generate(40).seeded(8).run_list(pool) != a);

  // transforms and non-collect actions ride along
  CHECK(d.generate(40).seeded(7).count().run_count(pool) == 40);
}

TEST_CASE("an expired soft deadline stops scheduling but keeps what finished") {
  Domain d = range_domain(100);

  PoolOptions spent = fixed_spans(10, 2);
  spent.deadline_ms = -1.0;  // already past before the first submission
  PoolContext pool(spent);
  CHECK(Pipeline(d).count().run_count(pool) == 0);
  CHECK(pool.last_run_jobs().empty());

  PoolOptions roomy = fixed_spans(10, 2);
  roomy.deadline_ms = 1e9;
  PoolContext pool2(roomy);
  CHECK(Pipeline(d).count().run_count(pool2) == 100);
}

TEST_CASE("job descriptors serialize as JSON") {
  Domain d = range_domain(40);
  PoolContext pool(fixed_spans(16, 2));
  CHECK(Pipeline(d).count().run_count(pool) == 40);
  REQUIRE(!pool.last_run_jobs().empty());
  for (const SliceJob& j : pool.last_run_jobs()) {
    auto parsed = nlohmann::json::parse(j.describe());
    CHECK(parsed["strategy"] == "full");
    CHECK(parsed["offset"].get<std::uint64_t>() == j.offset);
    CHECK(parsed["span"].get<std::uint64_t>() == j.span);
  }
}

TEST_CASE("default planning covers a small domain in one growing pass") {
  Domain d = range_domain(100);
  PoolContext pool;  // default options: initial span 1024
  CHECK(Pipeline(d).count().run_count(pool) == 100);
  REQUIRE(pool.last_run_jobs().size() == 1);
  CHECK(pool.last_run_jobs()[0].span == 100);
}

TEST_CASE("a pool requires at least one worker") {
  PoolOptions o;
  o.workers = 0;
  CHECK_THROWS_AS(PoolContext{o}, EngineError);
}

}  // TEST_SUITE
