#ifndef PSTIRLING_PARALLEL_HPP
#define PSTIRLING_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pstirling {

inline unsigned worker_count() {
    if (const char* env = std::getenv("PSTIRLING_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs f(i) for i in [0, count). Results must be written into per-index
// slots by the caller so that the merged output is deterministic.
template <class F>
void parallel_for(std::size_t count, F&& f, unsigned threads = 0) {
    if (threads == 0) threads = worker_count();
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            f(i);
        }
    };
    std::vector<std::thread> pool;
    unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    pool.reserve(spawn);
    for (unsigned t = 1; t < spawn; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

}  // namespace pstirling

#endif
