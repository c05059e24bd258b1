#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace evs::detail {

/// Samples per accumulation chunk. Fixed so that results never depend on the
/// number of workers.
inline constexpr std::size_t chunk_size = 4096;

inline std::size_t chunk_count(std::size_t n) noexcept {
    return (n + chunk_size - 1) / chunk_size;
}

/// Runs fn(chunk_index, begin, end) for every chunk, statically striped over
/// `workers` threads. fn must only write state owned by its chunk.
template <class Fn>
void for_each_chunk(std::size_t n, unsigned workers, Fn&& fn) {
    const std::size_t chunks = chunk_count(n);
    auto run = [&](std::size_t first, std::size_t stride) {
        for (std::size_t c = first; c < chunks; c += stride) {
            const std::size_t begin = c * chunk_size;
            fn(c, begin, std::min(n, begin + chunk_size));
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), chunks);
    if (threads <= 1) {
        run(0, 1);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run, t, threads);
    run(0, threads);
}

/// Pairwise tree reduction in chunk-index order: (0,1), (2,3), ... then again.
template <class T, class Merge>
T tree_reduce(std::vector<T> parts, Merge&& merge) {
    if (parts.empty()) return T{};
    while (parts.size() > 1) {
        std::vector<T> next;
        next.reserve((parts.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
            merge(parts[i], parts[i + 1]);
            next.push_back(std::move(parts[i]));
        }
        if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
        parts = std::move(next);
    }
    return std::move(parts.front());
}

} // namespace evs::detail
