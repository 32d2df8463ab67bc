#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace mmq {

/// Worker-thread count: explicit request, else MM_THREADS, else hardware.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Results must be
/// written to per-index slots so the partition cannot affect the output.
template <typename Fn>
void parallel_chunks(long long n, int threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        fn(0LL, n);
        return;
    }
    const long long workers = std::min<long long>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (long long w = 0; w < workers; ++w) {
        const long long begin = n * w / workers;
        const long long end = n * (w + 1) / workers;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

} // namespace mmq
