#include "omnisal/threading.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace omnisal {

namespace {

int default_thread_count() {
    if (const char* env = std::getenv("OMNISAL_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_threads{0}; // 0 = unset, resolve lazily

thread_local bool t_inside_parallel = false;

} // namespace

int thread_count() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n == 0) {
        n = default_thread_count();
        g_threads.store(n, std::memory_order_relaxed);
    }
    return n;
}

void set_thread_count(int n) {
    g_threads.store(n >= 1 ? n : default_thread_count(), std::memory_order_relaxed);
}

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int count = end - begin;
    if (count <= 0)
        return;
    int n = thread_count();
    if (n <= 1 || count < 2 * n || t_inside_parallel) {
        for (int i = begin; i < end; ++i)
            fn(i);
        return;
    }
    n = std::min(n, count);
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n));
    // Static block partition; each index is handled by exactly one thread.
    for (int t = 0; t < n; ++t) {
        int lo = begin + static_cast<int>(static_cast<long long>(count) * t / n);
        int hi = begin + static_cast<int>(static_cast<long long>(count) * (t + 1) / n);
        workers.emplace_back([lo, hi, &fn] {
            t_inside_parallel = true;
            for (int i = lo; i < hi; ++i)
                fn(i);
            t_inside_parallel = false;
        });
    }
    for (auto& w : workers)
        w.join();
}

} // namespace omnisal
