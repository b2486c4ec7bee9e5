#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace softrank {

/// Evaluates fn(i) for i in [0, count) on up to `threads` workers and returns
/// the results in index order. Work items must not share mutable state. If
/// any item throws, the exception from the lowest failing index is rethrown.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t count, int threads, Fn fn) {
    std::vector<Result> results(count);
    std::vector<std::exception_ptr> errors(count);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads < 1 ? 1 : threads, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        results[i] = fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace softrank
