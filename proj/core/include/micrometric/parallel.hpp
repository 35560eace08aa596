#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace micrometric::parallel {

// Global cap on worker threads. 0 means "use hardware concurrency".
void set_max_threads(int n);
int max_threads();

// Runs fn(begin, end) over [0, n) split into contiguous ranges of at least
// `grain` indices. Callers must make fn's effect independent of the split
// (disjoint writes, or self-contained range values).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t grain = 1024);

// Reduction chunk width. Partial sums are always formed over these fixed
// index ranges and combined in index order, which keeps reductions
// bit-identical between serial and parallel runs.
inline constexpr std::size_t kReduceChunk = 4096;

// Neumaier-compensated sum of a contiguous range.
double compensated_sum(std::span<const double> values);

// Deterministic compensated reduction: range_sum(begin, end) returns the
// compensated sum over one fixed chunk of [0, n). Chunk sums may be computed
// concurrently but are combined serially in chunk order.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& range_sum);

// Mean of a value array using the fixed-chunk reduction. n == 0 is the
// caller's error.
double deterministic_mean(std::span<const double> values);

}  // namespace micrometric::parallel
