#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace stripflow {

/// Worker cap: STRIPFLOW_THREADS if set (>= 1), else hardware concurrency
/// clamped to [1, 8].
inline unsigned worker_cap() {
    if (const char* env = std::getenv("STRIPFLOW_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return std::min(8u, std::max(1u, hw));
}

/// Parallel map over [0, n): each index writes only its own slot, so results
/// are independent of the execution order (bitwise).
template <class F>
void parallel_for(int n, F&& fn) {
    const unsigned workers = std::min<unsigned>(worker_cap(), static_cast<unsigned>(std::max(1, n)));
    if (workers <= 1 || n < 2) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + static_cast<int>(workers) - 1) / static_cast<int>(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const int lo = static_cast<int>(w) * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace stripflow
