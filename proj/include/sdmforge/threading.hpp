#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sdmforge {

// Worker budget: hardware concurrency capped by the SDMFORGE_WORKERS env var.
inline int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("SDMFORGE_WORKERS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

namespace detail {
inline bool& in_worker_flag() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

// Runs fn(begin, end) over disjoint contiguous chunks of [0, n). Each index is
// processed exactly once by exactly one worker, so any per-index computation
// that does not depend on chunking is bit-identical to a single-worker run.
// Nested calls degrade to serial execution.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const int workers = detail::in_worker_flag() ? 1 : worker_count();
    if (workers <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    const std::size_t base = n / chunks;
    const std::size_t rem = n % chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    std::vector<std::exception_ptr> errors(chunks);
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t len = base + (c < rem ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&, c, begin, end] {
            detail::in_worker_flag() = true;
            try {
                fn(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
            detail::in_worker_flag() = false;
        });
        begin = end;
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace sdmforge
