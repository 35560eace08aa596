#pragma once

#include <span>
#include <vector>

namespace micrometric {

// Exact nearest-rank percentile of a multiset: the element at 0-based rank
// floor(p/100 * n), clamped to [0, n-1], of the sorted pool. Ties take the
// lower rank by construction. Selection runs in O(n); `pool` is consumed as
// scratch.
double nearest_rank_percentile(std::vector<double>&& pool, double percentile);

// Same, over a read-only view (copies once).
double nearest_rank_percentile(std::span<const double> values, double percentile);

}  // namespace micrometric
