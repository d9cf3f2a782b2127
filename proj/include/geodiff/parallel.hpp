#pragma once

#include <cstddef>
#include <functional>

namespace geodiff {

// Worker count: GEODIFF_THREADS if set (>= 1), else hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n) on up to thread_count() threads. The first
// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace geodiff
