#pragma once

#include <cstddef>
#include <functional>

namespace pdiff {

/// Process-wide worker count used by parallel_for.  Starts from the
/// PDIFF_THREADS environment variable when set, otherwise a small multiple
/// of the hardware concurrency.  Every parallel loop in this library writes
/// per-index results into preallocated storage and reduces serially, so
/// numerical output never depends on this value.
int thread_count();
void set_thread_count(int n);

/// Run fn(i) for i in [0, n) across the configured worker threads.
/// fn must only touch index-i state; exceptions propagate to the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pdiff
