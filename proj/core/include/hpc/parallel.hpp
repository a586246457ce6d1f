// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hpc {

/// Chunk layout for deterministic parallel loops. The chunk count depends
/// only on the item count, never on the number of workers, so any reduction
/// that combines per-chunk results in chunk order is independent of how many
/// threads executed it.
struct ChunkPlan {
  std::size_t count = 0;
  std::size_t chunk_size = 0;
  std::size_t chunks = 0;

  static ChunkPlan over(std::size_t count, std::size_t max_chunks = 64,
                        std::size_t min_chunk = 32) {
    ChunkPlan p;
    p.count = count;
    if (count == 0) return p;
    p.chunk_size = std::max(min_chunk, (count + max_chunks - 1) / max_chunks);
    p.chunks = (count + p.chunk_size - 1) / p.chunk_size;
    return p;
  }
  std::size_t begin(std::size_t chunk) const { return chunk * chunk_size; }
  std::size_t end(std::size_t chunk) const { return std::min(count, (chunk + 1) * chunk_size); }
};

/// Runs fn(chunk_index, begin, end) for every chunk, using up to `threads`
/// workers pulling chunks from a shared counter. fn must only write to
/// storage owned by its chunk (or indexed by item), which keeps results
/// bit-identical for any thread count. Exceptions are rethrown on the caller.
template <typename Fn>
void parallel_chunks(const ChunkPlan& plan, int threads, Fn&& fn) {
  if (plan.chunks == 0) return;
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(plan.chunks)));
  if (workers == 1) {
    for (std::size_t c = 0; c < plan.chunks; ++c) fn(c, plan.begin(c), plan.end(c));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= plan.chunks || failed.load()) return;
      try {
        fn(c, plan.begin(c), plan.end(c));
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

/// Convenience wrapper: fn(item_index) over [0, count).
template <typename Fn>
void parallel_for_items(std::size_t count, int threads, Fn&& fn) {
  parallel_chunks(ChunkPlan::over(count), threads,
                  [&](std::size_t, std::size_t b, std::size_t e) {
                    for (std::size_t i = b; i < e; ++i) fn(i);
                  });
}

}  // namespace hpc
