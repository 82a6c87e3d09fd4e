#include "uhddip/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace uhddip {

namespace {
std::atomic<int> g_threads{0};

int resolved_threads() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}
}  // namespace

void set_num_threads(int n) { g_threads.store(n, std::memory_order_relaxed); }

int num_threads() { return resolved_threads(); }

void parallel_for_chunked(int64_t begin, int64_t end,
                          const std::function<void(int64_t, int64_t)>& fn) {
    const int64_t total = end - begin;
    if (total <= 0) return;
    int workers = resolved_threads();
    if (workers > total) workers = static_cast<int>(total);
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    const int64_t chunk = (total + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        const int64_t lo = begin + t * chunk;
        const int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    parallel_for_chunked(begin, end, [&fn](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace uhddip
