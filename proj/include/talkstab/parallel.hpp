#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace talkstab {

// Thread cap from TALKSTAB_THREADS (0 or unset = hardware concurrency).
inline unsigned thread_budget() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("TALKSTAB_THREADS");
    if (!env || !*env) return hw;
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end == env || n < 0) return hw;
    if (n == 0) return hw;
    return static_cast<unsigned>(std::min<long>(n, 256));
}

// Splits [begin, end) into contiguous chunks, one worker thread per chunk.
// fn(i) must write only to cell i's outputs; results are then identical for
// any thread count.
template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
    const int total = end - begin;
    if (total <= 0) return;
    unsigned workers = std::min<unsigned>(thread_budget(), static_cast<unsigned>(total));
    if (workers <= 1 || total < 64) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (total + static_cast<int>(workers) - 1) / static_cast<int>(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const int lo = begin + static_cast<int>(w) * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn]() {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace talkstab
