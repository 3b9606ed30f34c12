#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "canonforge/pipeline.hpp"

namespace canonforge {

enum class SliceStrategy { Full, Filtered, Fallback, Generate };

/// One unit of parallel work. Full/Filtered jobs are position descriptors
/// only — workers rebuild their slice iterators, no elements are shipped.
/// Fallback jobs carry a coordinator-produced batch; Generate jobs carry a
/// derived seed. Descriptors are JSON-serializable so a network transport
/// could carry them unchanged.
struct SliceJob {
  SliceStrategy strategy = SliceStrategy::Full;
  std::uint64_t offset = 0;  // position offset, batch start or sample start
  std::uint64_t span = 0;    // positions, batch size or sample count
  std::uint64_t seed = 0;    // Generate: per-chunk seed
  ValueList batch;           // Fallback: elements to process

  /// One-line JSON descriptor (batch reported by size).
  std::string describe() const;
};

struct JobStats {
  std::uint64_t span = 0;
  double wall_ms = 0.0;
  std::uint64_t produced = 0;  // domain elements the job saw
  std::uint64_t skipped = 0;   // filtered-out positions (Filtered slicing)
};

struct PoolOptions {
  std::uint32_t workers = 2;
  std::uint32_t target_job_ms = 100;
  std::uint64_t initial_span = 1024;
  std::uint64_t min_span = 16;
  std::uint64_t max_span = 1048576;
  /// Soft deadline: checked between job submissions; running jobs finish
  /// and their results are combined.
  std::optional<double> deadline_ms;
  /// Base seed for Generate chunk seeds (the pipeline's own seed is mixed
  /// in per chunk).
  std::uint64_t seed = 0;
};

/// Span of the next job: target_job_ms divided by the recent mean wall time
/// per position, clamped to [min_span, max_span]; initial_span (clamped)
/// when there is no history. Slower recent jobs yield smaller spans.
std::uint64_t plan_span(const PoolOptions& opts, std::span<const JobStats> recent);

/// An execution context owning a fixed worker pool. The coordinator plans
/// jobs adaptively, retries a failed job once (then raises
/// IncompleteExecutionError with the job descriptor), and combines partial
/// results in offset order: collect concatenates, count sums, reduce folds
/// partial folds (fold must be associative), max merges tied maxima and
/// re-applies the size cap, first takes the earliest. One execute() at a
/// time per context.
class PoolContext {
 public:
  explicit PoolContext(PoolOptions opts = {});
  ~PoolContext();
  PoolContext(const PoolContext&) = delete;
  PoolContext& operator=(const PoolContext&) = delete;

  RunResult execute(const Pipeline& p);

  const PoolOptions& options() const;
  /// Stats of the jobs of the most recent execute(), in offset order.
  const std::vector<JobStats>& last_run_stats() const;
  /// Job descriptors of the most recent execute(), in offset order.
  const std::vector<SliceJob>& last_run_jobs() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace canonforge
