#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace perfolab {

// Runs fn(i) for i in [0, count) on up to `threads` workers.  Work items
// write into index-addressed slots, so results never depend on scheduling.
template <typename F>
void parallel_for(std::size_t count, int threads, F&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t nw = std::min<std::size_t>(threads, count);
    pool.reserve(nw);
    for (std::size_t t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

inline int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace perfolab
