#include "micrometric/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace micrometric::parallel {

namespace {

std::atomic<int> g_max_threads{0};

int effective_threads() {
  const int cap = g_max_threads.load(std::memory_order_relaxed);
  if (cap > 0) return cap;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

int max_threads() { return effective_threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t grain) {
  if (n == 0) return;
  const int threads = effective_threads();
  if (grain == 0) grain = 1;
  const std::size_t block =
      std::max(grain, (n + static_cast<std::size_t>(threads) * 4 - 1) / (static_cast<std::size_t>(threads) * 4));
  const std::size_t n_blocks = (n + block - 1) / block;
  if (threads <= 1 || n_blocks <= 1) {
    fn(0, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks) return;
      const std::size_t begin = b * block;
      const std::size_t end = std::min(n, begin + block);
      fn(begin, end);
    }
  };
  const int spawn = static_cast<int>(std::min<std::size_t>(threads, n_blocks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(spawn - 1));
  for (int i = 1; i < spawn; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (const double v : values) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double deterministic_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& range_sum) {
  if (n == 0) return 0.0;
  // A single chunk reduces to the chunk sum itself; skip the scheduling
  // machinery, the result is identical.
  if (n <= kReduceChunk) return range_sum(0, n);
  const std::size_t n_chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(n_chunks);
  parallel_for(
      n_chunks,
      [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
          const std::size_t begin = c * kReduceChunk;
          const std::size_t end = std::min(n, begin + kReduceChunk);
          partial[c] = range_sum(begin, end);
        }
      },
      /*grain=*/1);
  return compensated_sum(partial);
}

double deterministic_mean(std::span<const double> values) {
  const double total = deterministic_sum(
      values.size(), [&](std::size_t b, std::size_t e) { return compensated_sum(values.subspan(b, e - b)); });
  return total / static_cast<double>(values.size());
}

}  // namespace micrometric::parallel
