#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace overlapctl {

namespace detail {
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};  // 0 = auto
  return cap;
}
}  // namespace detail

/// Caps the worker count used by parallel_for. 0 restores auto
/// (hardware concurrency). Thread count never changes results: every
/// work item is pure and writes only its own output slot.
inline void set_max_threads(int n) { detail::thread_cap().store(n < 0 ? 0 : n); }

inline int max_threads() {
  int cap = detail::thread_cap().load();
  if (cap <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    cap = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return cap;
}

/// Runs fn(i) for i in [0, count). Work items must be independent.
/// The first exception thrown by any item is rethrown to the caller.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(max_threads()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace overlapctl
