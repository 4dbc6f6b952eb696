#pragma once

// Deterministic index-parallel loop. Work is partitioned by index, results
// land in index order, so outputs are byte-identical for any thread count.
// Thread count comes from XITRACE_THREADS (default: hardware concurrency).

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace xitrace {

inline unsigned configured_threads() {
  if (const char* env = std::getenv("XITRACE_THREADS")) {
    const long n = std::atol(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

template <class Fn>  // Fn: void(std::size_t i)
inline void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned want = configured_threads();
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(want, n ? n : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&fn, w, workers, n] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace xitrace
