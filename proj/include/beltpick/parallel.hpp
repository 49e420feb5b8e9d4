#pragma once

#include <cstddef>
#include <functional>

namespace beltpick {

// Worker count: BELTPICK_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

// Splits [0, n) into contiguous chunks, one per worker. Each index is visited
// by exactly one worker, so any output written per index is independent of
// the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace beltpick
