#pragma once

#include <cstddef>
#include <functional>

namespace hubersl {

/// Worker count from HUBERSL_WORKERS, else hardware concurrency (at least 1).
std::size_t default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads.
/// Each index is handled exactly once; callers write results into per-index
/// slots so the outcome does not depend on scheduling. The first exception
/// thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace hubersl
