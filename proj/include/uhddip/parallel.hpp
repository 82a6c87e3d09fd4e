#pragma once

#include <cstdint>
#include <functional>

namespace uhddip {

// Process-wide worker cap for internal loop parallelism. 0 = auto
// (hardware concurrency). Results never depend on the value: workers
// always own disjoint output ranges and every output element is
// produced by exactly one fixed-order inner loop.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [begin, end), split into contiguous chunks across
// workers. Falls back to a serial loop for small ranges or one worker.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

// Chunked variant: fn(chunk_begin, chunk_end). Cheaper when the body is tiny.
void parallel_for_chunked(int64_t begin, int64_t end,
                          const std::function<void(int64_t, int64_t)>& fn);

}  // namespace uhddip
