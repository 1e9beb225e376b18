#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

#include "mfvis/field.hpp"

namespace mfvis {

/// Worker count: MFVIS_THREADS if set to a positive integer, else the
/// hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n) across up to thread_count() threads. Each index
/// is visited exactly once; callers write only to slots owned by i.
template <typename Fn>
void parallel_for(Index n, Fn&& fn) {
    const Index workers = std::min<Index>(thread_count(), n);
    if (workers <= 1) {
        for (Index i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(std::size_t(workers));
    for (Index w = 0; w < workers; ++w) {
        pool.emplace_back([&fn, w, workers, n] {
            for (Index i = w; i < n; i += workers) {
                fn(i);
            }
        });
    }
}

}  // namespace mfvis
