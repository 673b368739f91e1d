#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mvjump {

// Worker count: MVJUMP_THREADS if set and positive, else the hardware count.
inline unsigned thread_count() {
    if (const char* env = std::getenv("MVJUMP_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
inline thread_local bool inside_worker = false;
}

// Calls fn(begin, end) on disjoint chunks of [0, n); rethrows the first
// exception raised by any chunk. Nested calls from a worker run inline.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = detail::inside_worker ? 1u : static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end] {
            detail::inside_worker = true;
            try {
                fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace mvjump
