#ifndef IVAR_DETAIL_PARALLEL_HPP
#define IVAR_DETAIL_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ivar::detail {

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Work items
/// must write only to their own slot; the first exception (lowest index) is
/// rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t count, F&& fn, unsigned threads = 0) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) guarded(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ivar::detail

#endif  // IVAR_DETAIL_PARALLEL_HPP
