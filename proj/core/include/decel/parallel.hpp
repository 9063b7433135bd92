#pragma once

#include <cstddef>
#include <functional>

namespace decel {

/// Worker count from DECEL_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
unsigned default_worker_count();

/// Calls fn(i) for every i in [0, n) on up to `workers` threads. Work is
/// handed out by index; callers write results into index-addressed slots so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any task is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace decel
