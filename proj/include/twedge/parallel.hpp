#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace twedge {

// Run fn(replicate_index) for every index in [0, reps) on a bounded pool.
// Each replicate must derive its randomness from its own index, so the
// schedule cannot influence results; a failure in any replicate aborts the
// whole run. workers <= 1 runs inline.
template <class Fn>
void for_each_replicate(int reps, int workers, Fn&& fn) {
    if (workers <= 1) {
        for (int r = 0; r < reps; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= reps || failed.load()) return;
            try {
                fn(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int n = std::min(workers, reps);
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace twedge
