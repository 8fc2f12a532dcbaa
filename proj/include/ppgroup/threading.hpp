#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ppgroup {

/// Runs fn(i) for i in [0, n) across up to max_threads workers. Tasks must be
/// independent; results should be written to pre-sized slots indexed by i so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any task is rethrown on the caller's thread.
inline void parallel_for(int n, const std::function<void(int)>& fn,
                         unsigned max_threads = 0)
{
    if (n <= 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned workers = max_threads == 0 ? hw : std::min(max_threads, hw);
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int i = static_cast<int>(w); i < n;
                     i += static_cast<int>(workers))
                    fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace ppgroup
