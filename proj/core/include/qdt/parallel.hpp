#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace qdt {

// QDT_CHOICE_THREADS caps worker threads; 0 means "hardware default".
inline int thread_cap_from_env() {
    const char* env = std::getenv("QDT_CHOICE_THREADS");
    if (!env) return 0;
    const int v = std::atoi(env);
    return v > 0 ? v : 1;
}

// Runs fn(0..n-1) across worker threads. Work items must be independent;
// results must not depend on scheduling. Rethrows the first exception.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int max_threads = 0) {
    if (n == 0) return;
    int cap = max_threads > 0 ? max_threads : thread_cap_from_env();
    if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap <= 0) cap = 1;
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cap), n);

    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += n_threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (std::thread& w : workers) w.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace qdt
