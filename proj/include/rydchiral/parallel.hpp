#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rydchiral {

// Process-wide worker limit (0: hardware concurrency) and a per-thread
// override used to keep nested loops serial inside pool workers.
inline std::atomic<unsigned>& global_thread_limit() {
  static std::atomic<unsigned> limit{0};
  return limit;
}
inline unsigned& local_thread_limit() {
  thread_local unsigned limit = 0;
  return limit;
}

inline unsigned default_threads() {
  if (const unsigned l = local_thread_limit()) return l;
  if (const unsigned g = global_thread_limit().load()) return g;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers pulling indices from
// a shared counter. Results must be written to per-index slots so the outcome
// does not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rydchiral
