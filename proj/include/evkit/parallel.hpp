#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace evk {

// Runs fn(chunk_index, begin, end) over [0, n) split into contiguous chunks,
// one per worker. Chunk boundaries depend only on (n, threads), so callers
// that concatenate per-chunk results in chunk order get output independent
// of how many workers actually ran.
inline void parallel_chunks(size_t n, int threads,
                            const std::function<void(int, size_t, size_t)>& fn) {
    if (n == 0) return;
    int workers = std::max(1, threads);
    size_t chunk = (n + workers - 1) / workers;
    int used = int((n + chunk - 1) / chunk);

    if (used <= 1) {
        fn(0, 0, n);
        return;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(used));
    pool.reserve(size_t(used) - 1);
    for (int c = 1; c < used; ++c) {
        size_t lo = size_t(c) * chunk;
        size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, c, lo, hi] {
            try {
                fn(c, lo, hi);
            } catch (...) {
                errors[size_t(c)] = std::current_exception();
            }
        });
    }
    try {
        fn(0, 0, std::min(n, chunk));
    } catch (...) {
        errors[0] = std::current_exception();
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace evk
