#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace lmi {

namespace detail {
inline std::atomic<int> g_thread_count{0};

// Blocks are a function of n only, never of the thread count, so that
// per-block partial results can be reduced in block order with identical
// floating-point behavior on any machine configuration.
inline std::size_t block_size_for(std::size_t n) {
  const std::size_t kBlocks = 64;
  std::size_t b = (n + kBlocks - 1) / kBlocks;
  return b == 0 ? 1 : b;
}
}  // namespace detail

/// Process-wide worker count used by parallel_for (0 = all cores).
inline void set_thread_count(int n) { detail::g_thread_count.store(n); }

inline int thread_count() {
  const int n = detail::g_thread_count.load();
  if (n > 0) return n;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n). fn must write only to i-indexed slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t block = detail::block_size_for(n);
  const std::size_t nblocks = (n + block - 1) / block;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::size_t lo = b * block;
      const std::size_t hi = std::min(n, lo + block);
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t spawn = std::min(workers, nblocks);
  pool.reserve(spawn);
  for (std::size_t t = 1; t < spawn; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

/// Splits [0, n) into fixed blocks (count independent of thread count) and
/// runs fn(block_index, lo, hi) in parallel; callers reduce per-block state
/// in block order. nblocks_hint caps the block count; pass a small value
/// when per-block state is large. Returns the actual block count.
inline std::size_t blocked_partition(std::size_t n, std::size_t nblocks_hint,
                                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return 0;
  std::size_t nblocks = nblocks_hint == 0 ? 1 : nblocks_hint;
  if (nblocks > n) nblocks = n;
  const std::size_t block = (n + nblocks - 1) / nblocks;
  nblocks = (n + block - 1) / block;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::size_t lo = b * block;
      const std::size_t hi = std::min(n, lo + block);
      fn(b, lo, hi);
    }
  };
  const std::size_t workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || nblocks == 1) {
    worker();
    return nblocks;
  }
  std::vector<std::thread> pool;
  const std::size_t spawn = std::min(workers, nblocks);
  pool.reserve(spawn);
  for (std::size_t t = 1; t < spawn; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return nblocks;
}

}  // namespace lmi
