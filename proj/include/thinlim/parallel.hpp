#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace thinlim {

/// Minimum of score(i) over i in [0, n) with its index. Chunks are evaluated on
/// up to `threads` workers and merged by (value, index), so the result does not
/// depend on the thread count. Exceptions from workers are rethrown.
template <typename Score>
std::pair<double, std::size_t> parallelArgMin(std::size_t n, int threads, Score&& score) {
    using Item = std::pair<double, std::size_t>;
    const Item none{std::numeric_limits<double>::infinity(), n};
    auto better = [](const Item& a, const Item& b) {
        return a.first < b.first || (a.first == b.first && a.second < b.second);
    };
    auto scan = [&](std::size_t lo, std::size_t hi) {
        Item best = none;
        for (std::size_t i = lo; i < hi; ++i) {
            Item cand{score(i), i};
            if (better(cand, best)) best = cand;
        }
        return best;
    };
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(threads > 0 ? threads : 1, n));
    if (workers == 1) return scan(0, n);

    std::vector<Item> partial(workers, none);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                partial[w] = scan(w * chunk, std::min(n, (w + 1) * chunk));
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    Item best = none;
    for (const auto& p : partial)
        if (better(p, best)) best = p;
    return best;
}

/// Run body(i) for i in [0, n) on up to `threads` workers in contiguous chunks.
template <typename Body>
void parallelFor(std::size_t n, int threads, Body&& body) {
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(threads > 0 ? threads : 1, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace thinlim
