#pragma once

// Fixed-block work partitioning. Blocks are computed independently (possibly
// on several threads) and their partial results combined in block order, so
// the result is bit-identical for any worker count.

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace procdcov {

/// Run fn(block_index) for block_index in [0, num_blocks). workers == 0
/// means hardware concurrency; workers == 1 runs inline.
inline void for_each_block(std::size_t num_blocks, unsigned workers,
                           const std::function<void(std::size_t)>& fn) {
    if (workers == 0) {
        workers = std::thread::hardware_concurrency();
        if (workers == 0) workers = 1;
    }
    if (workers == 1 || num_blocks <= 1) {
        for (std::size_t b = 0; b < num_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(
        std::min<std::size_t>(workers, num_blocks));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= num_blocks) return;
                fn(b);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace procdcov
