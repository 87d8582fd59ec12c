#pragma once

// Minimal fork-join helper. Work items are independent; callers that reduce
// write per-item partials and combine them in index order afterwards, so the
// result never depends on the worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace strokesynth {

namespace detail {
inline std::atomic<unsigned>& thread_limit() {
  static std::atomic<unsigned> limit{0};  // 0 = hardware concurrency
  return limit;
}
}  // namespace detail

inline void set_thread_count(unsigned n) { detail::thread_limit().store(n); }

inline unsigned thread_count() {
  unsigned n = detail::thread_limit().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Calls fn(i) for every i in [0, count). Items are handed out dynamically.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace strokesynth
