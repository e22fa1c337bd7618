#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace honesty {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
/// written by index (record identity), never by arrival order. The first
/// exception is rethrown after all workers join.
template <typename Fn>
void parallel_for_indexed(size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  size_t nthreads = std::min<size_t>(std::max(workers, 1), n);
  if (nthreads == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace honesty
