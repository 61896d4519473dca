#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace lcfgrad {

// Static block partition of [0, n) over `threads` workers.
// Chunk boundaries depend only on (n, threads), so any per-chunk
// accumulation merged in chunk order is deterministic for a fixed
// worker count; across worker counts results differ only by
// floating-point reassociation.
inline std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t n, int threads) {
  threads = std::max(1, threads);
  std::size_t t = std::min<std::size_t>(threads, n == 0 ? 1 : n);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(t);
  std::size_t base = n / t, rem = n % t, begin = 0;
  for (std::size_t i = 0; i < t; ++i) {
    std::size_t len = base + (i < rem ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

// Runs body(chunk_index, begin, end) on each chunk, possibly concurrently.
// body must not touch shared mutable state except through its own chunk slot.
template <typename Body>
void parallel_chunks(std::size_t n, int threads, Body&& body) {
  auto ranges = chunk_ranges(n, threads);
  if (ranges.size() <= 1) {
    if (!ranges.empty()) body(std::size_t{0}, ranges[0].first, ranges[0].second);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(ranges.size());
  for (std::size_t c = 0; c < ranges.size(); ++c)
    pool.emplace_back([&, c] { body(c, ranges[c].first, ranges[c].second); });
  for (auto& th : pool) th.join();
}

}  // namespace lcfgrad
