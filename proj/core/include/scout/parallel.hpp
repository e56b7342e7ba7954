#pragma once

#include <cstddef>
#include <functional>

namespace scout {

/// Worker cap: SCOUT_THREADS if set and positive, otherwise hardware concurrency.
int worker_threads();

/// Runs body(i) for i in [0, n) on up to worker_threads() threads. Each index
/// is handled by exactly one thread; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace scout
