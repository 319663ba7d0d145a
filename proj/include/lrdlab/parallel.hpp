#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lrd {

/// Process-wide worker count used when a call does not pass one explicitly.
inline int& default_threads() {
  static int n = 1;
  return n;
}

inline void set_default_threads(int n) { default_threads() = std::max(1, n); }

/// Runs f(i) for i in [begin, end) on up to `threads` workers. Work items are
/// handed out dynamically; callers must write results into per-index slots so
/// the outcome does not depend on scheduling. The first exception is rethrown.
template <class F>
void parallel_for(std::size_t begin, std::size_t end, F&& f, int threads = default_threads()) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), n);
  if (workers == 1) {
    for (std::size_t i = begin; i < end; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= end) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next.store(end);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace lrd
