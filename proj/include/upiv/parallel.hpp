#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace upiv {

// Resolves a requested worker count: 0 means "hardware concurrency".
inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(begin, end) over [0, count) split into contiguous blocks, one per
// worker. Callers must write disjoint outputs per index so that the result does
// not depend on the worker count.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
    workers = resolve_workers(workers);
    if (workers <= 1 || count <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    const std::size_t n = std::min<std::size_t>(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(n);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t begin = count * w / n;
        const std::size_t end = count * (w + 1) / n;
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace upiv
