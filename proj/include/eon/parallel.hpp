#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace eon {

// Worker count from EON_NUM_WORKERS (default 1). Parallelism in this project
// never changes results, only wall time.
inline int num_workers() {
  const char* env = std::getenv("EON_NUM_WORKERS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items must
// not share mutable state; results should be written to pre-sized slots.
inline void parallel_for(int count, const std::function<void(int)>& fn,
                         int workers) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min(workers, count);
  pool.reserve(n);
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace eon
