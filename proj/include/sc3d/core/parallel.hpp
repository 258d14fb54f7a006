#ifndef SC3D_CORE_PARALLEL_HPP
#define SC3D_CORE_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sc3d {

// Worker count: explicit value if > 0, else SC3D_JOBS, else hardware threads.
inline int resolve_jobs(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SC3D_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). Each index is independent; the first exception
// (lowest index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    jobs = std::min(std::max(1, jobs), std::max(1, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr first_err;
    int first_idx = n;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (i < first_idx) {
                        first_idx = i;
                        first_err = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_err) std::rethrow_exception(first_err);
}

}  // namespace sc3d

#endif  // SC3D_CORE_PARALLEL_HPP
