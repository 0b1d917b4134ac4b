#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace pwrank {

/// Calls fn(i) for i in [0, n) with at most `parallelism` calls in flight.
/// Returns after every call has finished. `fn` must not throw.
template <class Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, parallelism)), n);
    if (workers <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
}

}  // namespace pwrank
