#pragma once

#include <cstdint>
#include <functional>

namespace detailnet {

// Worker cap: DETAILNET_THREADS env var, else hardware concurrency.
int max_threads();

// Splits [0, n) into contiguous chunks, one per worker. Every index is
// processed by exactly one worker, so writes to disjoint outputs are
// bitwise reproducible regardless of the thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace detailnet
