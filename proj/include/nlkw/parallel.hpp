#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "nlkw/estimate.hpp"

namespace nlkw::par {

/// Worker count: hardware concurrency by default; the NLKW_THREADS env var,
/// when set, fixes the count (clamped to [1, 64]). Results never depend on it.
inline std::size_t worker_count() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("NLKW_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && v >= 1) n = std::min<std::size_t>(v, 64);
    }
    return n;
}

/**
 * Deterministic parallel reduction over indices [0, n).
 *
 * Indices are processed in fixed blocks; each block accumulates its samples
 * in index order, and block results are merged in block order afterwards.
 * The floating-point result is therefore identical for any worker count.
 *
 * Fn: void(std::size_t index, std::span<double> out) writing `dim` samples.
 */
template <class Fn>
Accumulator reduce(std::size_t n, std::size_t dim, Fn&& fn, std::size_t block_size = 1024) {
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
    std::vector<Accumulator> blocks(n_blocks, Accumulator(dim));

    auto run_block = [&](std::size_t b, std::vector<double>& scratch) {
        const std::size_t lo = b * block_size;
        const std::size_t hi = std::min(n, lo + block_size);
        for (std::size_t i = lo; i < hi; ++i) {
            fn(i, std::span<double>(scratch));
            blocks[b].add(scratch);
        }
    };

    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(n_blocks, 1));
    if (workers <= 1 || n_blocks <= 1) {
        std::vector<double> scratch(dim);
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b, scratch);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            std::vector<double> scratch(dim);
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                try {
                    run_block(b, scratch);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n_blocks);
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

    Accumulator total(dim);
    for (const auto& b : blocks) total.merge(b);
    return total;
}

} // namespace nlkw::par
