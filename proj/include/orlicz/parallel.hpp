#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace orlicz {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to per-index slots by the caller, so the outcome does not depend on
/// scheduling. The first exception (lowest index) is rethrown.
template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  int err_index = count;
  std::exception_ptr err;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(err_mutex);
            if (i < err_index) {
              err_index = i;
              err = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace orlicz
