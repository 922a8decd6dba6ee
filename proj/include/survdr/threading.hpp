#pragma once

// Minimal deterministic work-sharing: a parallel index loop. Work units must
// write only to their own output slot; callers aggregate sequentially in index
// order afterwards, so results never depend on the worker count.

#include <cstddef>
#include <functional>

namespace survdr {

// Resolve a thread-count request: the SURVDR_THREADS environment variable
// overrides everything, then values >= 1 are taken as-is, falling back to
// the hardware concurrency.
int resolve_threads(int requested);

// Run body(i) for i in [0, n). Exceptions from workers are captured and the
// first one is rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace survdr
