#pragma once

#include <cstddef>
#include <functional>

namespace segad {

// Process-wide cap on worker threads used by parallel_for (>= 1).
void set_max_workers(std::size_t n);
std::size_t max_workers();

// Runs body(i) for i in [0, n). Each index is handled exactly once; callers
// write results into per-index slots so the outcome does not depend on the
// worker count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace segad
