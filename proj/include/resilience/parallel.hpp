#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace resilience::detail {

/// Worker count: hardware concurrency capped by RESILIENCE_THREADS.
inline std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RESILIENCE_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return std::min(n, std::max<std::size_t>(1, jobs));
}

/**
 * Run fn(i) for i in [0, count). fn must be pure per index; results must be
 * written to per-index slots by the caller so the reduction stays
 * deterministic regardless of the worker count.
 */
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = worker_count(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace resilience::detail
