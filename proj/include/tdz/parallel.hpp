#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tdz {

// Worker count: TDZ_WORKERS if set and positive, else the hardware thread count.
inline int default_workers() {
    if (const char* env = std::getenv("TDZ_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline int resolve_workers(int requested) { return requested > 0 ? requested : default_workers(); }

// Runs body(worker, begin, end) over contiguous blocks of [0, n). Blocks are a
// fixed function of (n, workers); callers that need worker-independent output
// write per-index results and reduce them in index order.
template <typename Body>
void parallel_blocks(std::uint64_t n, int workers, Body&& body) {
    workers = resolve_workers(workers);
    if (n == 0) return;
    const std::uint64_t w = std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), n);
    if (w == 1) {
        body(0, std::uint64_t{0}, n);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::uint64_t k = 0; k < w; ++k) {
        const std::uint64_t begin = n * k / w, end = n * (k + 1) / w;
        pool.emplace_back([&, k, begin, end] {
            try {
                body(static_cast<int>(k), begin, end);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// out[i] = fn(i) for i in [0, n).
template <typename T, typename Fn>
std::vector<T> parallel_map(std::uint64_t n, int workers, Fn&& fn) {
    std::vector<T> out(n);
    parallel_blocks(n, workers, [&](int, std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) out[i] = fn(i);
    });
    return out;
}

}  // namespace tdz
