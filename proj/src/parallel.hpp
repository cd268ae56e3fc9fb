#pragma once

#include <cstddef>
#include <functional>

namespace opacity::internal {

// Worker count from OPACITY_THREADS, else the hardware concurrency.
unsigned thread_count();

// Calls fn(i) for i in [0, n). Work is split in contiguous blocks, so any
// per-index output written by fn is independent of the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace opacity::internal
