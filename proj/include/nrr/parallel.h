#pragma once

#include <cstddef>
#include <functional>

namespace nrr {

/// Worker count used by parallel loops; capped via set_thread_cap.
int thread_count();

/// Caps the number of worker threads (CLI --threads). n <= 0 resets to
/// hardware concurrency.
void set_thread_cap(int n);

/// Runs fn(begin, end) over disjoint chunks of [0, n). Chunk boundaries
/// depend only on n and chunk_size, never on the worker count, so callers
/// that store per-chunk partial results and reduce them in chunk order get
/// bit-identical output for any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t)>& fn);

/// Element-wise parallel loop; no ordering guarantees between elements.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nrr
