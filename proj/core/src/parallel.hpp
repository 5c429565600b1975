#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace twoscale::detail {

/// Runs body(i) for i in [0, n) on hardware threads with strided assignment.
inline void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace twoscale::detail
