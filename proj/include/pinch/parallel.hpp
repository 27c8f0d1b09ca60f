#pragma once
// Static block partition over [0, n): thread t owns one contiguous block, so
// writes to per-index slots are disjoint and results do not depend on the
// thread count or scheduling.

#include <functional>
#include <thread>
#include <vector>

namespace pinch {

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  int t_use = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t_use);
  for (int t = 0; t < t_use; ++t) {
    int lo = static_cast<int>(static_cast<long long>(n) * t / t_use);
    int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / t_use);
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pinch
