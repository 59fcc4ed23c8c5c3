#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace greenbiqa {

// Runs f(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). If several calls throw, the exception of the lowest index is
// rethrown, so failures are reported deterministically.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed.load(std::memory_order_relaxed); i = next++) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace greenbiqa
