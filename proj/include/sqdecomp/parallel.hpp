#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace sqdecomp {

/// Number of items handled by one work unit in chunked loops. Reductions
/// always sum per-chunk partials in chunk order, so results do not depend on
/// the thread count.
inline constexpr std::size_t kChunkSize = 1024;

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Calls fn(chunk_index, begin, end) for every chunk of [0, n).
template <class Fn>
void for_each_chunk(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), chunks));
  auto run = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      const std::size_t begin = c * kChunkSize;
      fn(c, begin, std::min(n, begin + kChunkSize));
    }
  };
  if (workers <= 1) {
    run(0, 1);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w, workers);
  run(0, workers);
}

/// Deterministic chunked reduction. `partial(begin, end)` returns a value of
/// type T for a range; partials are combined left to right with `+=`.
template <class T, class Partial>
T chunked_reduce(std::size_t n, unsigned threads, T zero, Partial&& partial) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<T> partials(chunks, zero);
  for_each_chunk(n, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    partials[c] = partial(b, e);
  });
  T total = zero;
  for (const auto& p : partials) total += p;
  return total;
}

}  // namespace sqdecomp
