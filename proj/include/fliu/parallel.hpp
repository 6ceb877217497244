#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fliu {

// Runs fn(i) for i in [0, n). Tasks must be independent; results must be
// written to per-index slots so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::thread::hardware_concurrency();
    if (threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<size_t>(threads, n));
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace fliu
