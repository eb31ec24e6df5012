#include "ellab/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace ellab {

namespace {

std::atomic<int> g_threads{1};

template <typename T>
T pairwise_impl(std::span<const T> v)
{
    constexpr std::size_t kLeaf = 8;
    if (v.size() <= kLeaf) {
        T acc{};
        for (const T& x : v) {
            acc += x;
        }
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_impl(v.subspan(0, half)) + pairwise_impl(v.subspan(half));
}

} // namespace

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }

int num_threads() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const auto workers = static_cast<std::size_t>(num_threads());
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    const std::size_t count = std::min(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(count);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < count; ++t) {
        const std::size_t begin = n * t / count;
        const std::size_t end = n * (t + 1) / count;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

double pairwise_sum(std::span<const double> values) { return pairwise_impl(values); }

cplx pairwise_sum(std::span<const cplx> values) { return pairwise_impl(values); }

} // namespace ellab
