#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace psychoseed {

/// Runs body(i) for i in [0, n) on up to `threads` workers with static
/// chunking. Results must be written to per-index slots so output does not
/// depend on scheduling. The first exception (lowest index) is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr error;

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (i < failed_at) {
                        failed_at = i;
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace psychoseed
