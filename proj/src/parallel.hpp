#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mfe::detail {

inline std::size_t worker_count(std::size_t jobs, std::size_t tasks) {
  std::size_t n = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs task(i) for i in [0, count) on up to `jobs` threads; rethrows the
// exception of the lowest failing index.
template <typename Task>
void parallel_for(std::size_t count, std::size_t jobs, Task task) {
  const std::size_t workers = worker_count(jobs, count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace mfe::detail
