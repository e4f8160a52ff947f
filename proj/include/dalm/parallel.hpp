#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dalm {

// Worker count: hardware concurrency, capped by DALM_THREADS when set.
inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DALM_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

// Runs f(b) for b = 0..nblocks-1. Blocks must write disjoint outputs;
// callers reduce over blocks in index order so results do not depend on
// the number of workers.
template <class F>
void parallel_blocks(std::size_t nblocks, F&& f) {
    unsigned workers = std::min<std::size_t>(worker_count(), nblocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) f(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto run = [&] {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            try {
                f(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
                next = nblocks;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace dalm
