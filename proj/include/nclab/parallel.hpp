#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nclab::detail {

// Runs body(0..count-1) on up to `workers` threads. Work items must be
// independent; results must be written to preassigned slots so completion
// order cannot matter. The first exception thrown by any item is rethrown
// after all threads join.
inline void parallel_run(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    const std::size_t nthreads =
        std::min<std::size_t>(count, workers > 1 ? static_cast<std::size_t>(workers) : 1);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nclab::detail
