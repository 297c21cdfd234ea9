#include "triflow/threading.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace triflow {

int worker_count() {
  static int cached = [] {
    if (const char* env = std::getenv("TRIFLOW_THREADS")) {
      int n = std::atoi(env);
      if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

void parallel_for(int n, const std::function<void(int)>& body) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1 || n < 256) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      constexpr int chunk = 64;
      while (true) {
        int start = next.fetch_add(chunk);
        if (start >= n) break;
        int end = std::min(n, start + chunk);
        for (int i = start; i < end; ++i) body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace triflow
