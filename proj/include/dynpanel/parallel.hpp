#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace dynpanel {

// Pairwise (tree) reduction. Summation order depends only on the element
// order, never on thread count, which keeps parallel objective evaluation
// reproducible.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 32) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline int default_workers() {
  if (const char* env = std::getenv("DYNPANEL_WORKERS")) {
    const long w = std::strtol(env, nullptr, 10);
    if (w >= 1) return static_cast<int>(w);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

inline int resolve_workers(int requested) {
  return requested >= 1 ? requested : default_workers();
}

// Runs fn(i) for i in [0, count). Work-stealing over an atomic cursor; each
// item must write only to its own output slot so results are independent of
// scheduling.
inline void parallel_for(std::int64_t count, int workers,
                         const std::function<void(std::int64_t)>& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = cursor.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(std::min<std::int64_t>(workers, count));
  pool.reserve(spawn - 1);
  for (int t = 1; t < spawn; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace dynpanel
