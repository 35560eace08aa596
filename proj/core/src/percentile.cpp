#include "micrometric/percentile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace micrometric {

double nearest_rank_percentile(std::vector<double>&& pool, double percentile) {
  if (pool.empty()) throw std::invalid_argument("percentile of an empty pool");
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw std::invalid_argument("percentile must lie in [0, 100], got " + std::to_string(percentile));
  }
  const auto n = pool.size();
  auto rank = static_cast<std::size_t>(std::floor(percentile / 100.0 * static_cast<double>(n)));
  if (rank >= n) rank = n - 1;
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(rank), pool.end());
  return pool[rank];
}

double nearest_rank_percentile(std::span<const double> values, double percentile) {
  return nearest_rank_percentile(std::vector<double>(values.begin(), values.end()), percentile);
}

}  // namespace micrometric
