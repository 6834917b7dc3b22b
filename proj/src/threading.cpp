#include "detailnet/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace detailnet {

int max_threads() {
    static const int cached = [] {
        if (const char* env = std::getenv("DETAILNET_THREADS")) {
            int n = std::atoi(env);
            if (n > 0) {
                return n;
            }
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? static_cast<int>(hw) : 1;
    }();
    return cached;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (n <= 0) {
        return;
    }
    std::int64_t workers = std::min<std::int64_t>(max_threads(), n);
    if (workers <= 1) {
        body(0, n);
        return;
    }
    std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers) - 1);
    for (std::int64_t w = 1; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) {
            break;
        }
        threads.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    body(0, std::min(n, chunk));
    for (auto& t : threads) {
        t.join();
    }
}

}  // namespace detailnet
