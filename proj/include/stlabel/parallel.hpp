#ifndef STLABEL_PARALLEL_HPP
#define STLABEL_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stlabel {

/**
 * Run `fn(begin, end)` over contiguous chunks of [0, n).
 *
 * Chunks are disjoint, so work that only writes to its own output slots
 * produces identical results for any thread count. Reductions that need an
 * order must be assembled by the caller after the join.
 */
template<typename Fn>
void parallel_for(size_t n, int threads, Fn fn) {
    if (n == 0) {
        return;
    }
    size_t nthreads = std::max(1, threads);
    nthreads = std::min(nthreads, n);
    if (nthreads == 1) {
        fn(size_t(0), n);
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex error_lock;

    size_t chunk = (n + nthreads - 1) / nthreads;
    for (size_t t = 0; t < nthreads; ++t) {
        size_t begin = t * chunk;
        size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&, begin, end]() {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> g(error_lock);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}

#endif
