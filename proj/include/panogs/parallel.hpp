#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace panogs {

/// Worker count used when a caller passes 0.
inline int default_thread_count()
{
    return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n) over a static interleaved partition. Callers write only to
/// slots owned by i, so results never depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, int threads = 0)
{
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(threads > 0 ? threads : default_thread_count()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) {
                        fn(i);
                    }
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace panogs
