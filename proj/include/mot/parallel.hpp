#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mot {

// Worker cap for the data-parallel batch sections (path evaluation and batch
// discretisation). Results are written by index, so the outputs do not depend
// on the thread count.
inline std::size_t& worker_threads() {
    static std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return n;
}

inline void set_worker_threads(std::size_t n) { worker_threads() = std::max<std::size_t>(1, n); }

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min(worker_threads(), n == 0 ? 1 : n);
    if (workers <= 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            const std::size_t chunk = 16;
            while (true) {
                std::size_t begin = next.fetch_add(chunk);
                if (begin >= n) break;
                std::size_t end = std::min(n, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace mot
