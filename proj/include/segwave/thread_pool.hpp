#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace segwave {

// Runs fn(0..n_tasks-1) on up to `jobs` threads. Tasks must be independent;
// results keyed by task index stay deterministic regardless of scheduling.
// The first exception thrown by any task is rethrown on the caller.
inline void parallel_for(int jobs, int n_tasks,
                         const std::function<void(int)>& fn) {
  if (n_tasks <= 0) return;
  jobs = std::clamp(jobs, 1, n_tasks);
  if (jobs == 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace segwave
