#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace vipsim {

/// Default worker count: the hardware concurrency, at least one.
inline unsigned default_workers() { return std::max(1U, std::thread::hardware_concurrency()); }

/// Calls `fn(k)` for every k in [0, n) on up to `workers` threads. Each index
/// runs exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) fn(k);
  };
  std::vector<std::jthread> pool;
  auto count = std::min<std::size_t>(workers, n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(body);
}

}  // namespace vipsim
