#pragma once

#include <cstddef>
#include <functional>

namespace vpme {

/// Worker cap: VPME_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Fixed chunk count for reductions. Results never depend on the worker count
/// because partial sums are always formed per chunk and combined in chunk order.
inline constexpr std::size_t kReductionChunks = 16;

/// Runs fn(c) for every c in [0, chunks). Chunks are distributed over workers.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn);

/// Half-open range [begin, end) of chunk c when splitting n items into `chunks` pieces.
inline std::pair<std::size_t, std::size_t> chunk_range(std::size_t n, std::size_t chunks,
                                                       std::size_t c) {
  return {n * c / chunks, n * (c + 1) / chunks};
}

}  // namespace vpme
