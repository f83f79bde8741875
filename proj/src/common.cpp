#include "vx/common.hpp"

#include <atomic>

namespace vx {

namespace {
std::atomic<int> g_workers{0};  // 0 = use hardware_concurrency
}

int worker_count() {
    int n = g_workers.load();
    if (n > 0) return n;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

void set_worker_count(int n) { g_workers.store(n < 0 ? 0 : n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    int w = worker_count();
    if (w <= 1 || n < 2) {
        if (n > 0) fn(0, n);
        return;
    }
    std::size_t chunks = std::min<std::size_t>(std::size_t(w), n);
    std::vector<std::thread> pool;
    pool.reserve(chunks - 1);
    std::size_t base = n / chunks, rem = n % chunks, begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t len = base + (c < rem ? 1 : 0);
        std::size_t b = begin, e = begin + len;
        begin = e;
        if (c + 1 == chunks)
            fn(b, e);
        else
            pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

}  // namespace vx
