// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace tubetopo {

namespace detail {
inline std::atomic<unsigned>& thread_count_slot()
{
    static std::atomic<unsigned> n{1};
    return n;
}
} // namespace detail

/// Number of worker threads used by data-parallel kernels. Results never
/// depend on this value; every parallel kernel writes disjoint outputs.
inline unsigned thread_count() { return detail::thread_count_slot().load(); }

inline void set_thread_count(unsigned n)
{
    if (n == 0)
        n = std::max(1u, std::thread::hardware_concurrency());
    detail::thread_count_slot().store(n);
}

/// Calls fn(i) for i in [begin, end), split into contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn)
{
    const std::size_t n = end > begin ? end - begin : 0;
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i)
            fn(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i)
                fn(i);
        });
    }
}

} // namespace tubetopo
