#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace copnet {

// Runs fn(0..count-1) on up to `jobs` worker threads. Tasks must be
// independent; the first thrown exception is rethrown after all workers
// join, so results stay well defined.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (jobs <= 1 || count == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    const int n_threads = std::min(jobs, count);
    threads.reserve(std::size_t(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace copnet
