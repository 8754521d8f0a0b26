#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace shapprop {

// Global worker cap: set_thread_limit() wins, then SHAPPROP_THREADS, then
// hardware concurrency. Always at least 1.
int thread_limit();
void set_thread_limit(int n);

// Runs f(begin, end) over contiguous blocks of [0, n). Callers must write to
// disjoint slots; with that discipline results are identical for any thread
// count, which is what keeps the explainers deterministic under --threads.
template <class F>
void parallel_blocks(std::size_t n, F&& f) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), n ? n : 1);
  if (workers <= 1 || n < 2) {
    if (n > 0) f(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&f, begin, end] { f(begin, end); });
  }
  for (auto& t : pool) t.join();
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  parallel_blocks(n, [&f](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) f(i);
  });
}

}  // namespace shapprop
