#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cal {

/// Upper bound on worker threads used by parallel_for. 0 means
/// hardware_concurrency. Results never depend on this value: callers only use
/// parallel_for for loops whose iterations write disjoint outputs.
void set_max_workers(std::size_t workers);
std::size_t max_workers();

/// Calls fn(begin, end) over contiguous shards of [0, n).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_shard = 64) {
    if (n == 0) return;
    std::size_t workers = max_workers();
    if (workers == 0) workers = std::max<unsigned>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, (n + min_shard - 1) / std::max<std::size_t>(1, min_shard));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t shard = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * shard;
            const std::size_t end = std::min(n, begin + shard);
            if (begin >= end) break;
            threads.emplace_back([&, w, begin, end] {
                try {
                    fn(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace cal
