#pragma once

#include <cstdint>
#include <functional>

namespace mwlil {

/// Worker count: MWLIL_THREADS when set, else `requested`, else the number
/// of hardware threads when `requested` is 0.
int resolve_threads(int requested);

/// Calls body(i) for i in [0, count) on up to `threads` workers.  Work is
/// handed out in index order; callers write results into per-index slots and
/// reduce them afterwards, so results do not depend on the thread count.
/// The first exception thrown by a body is rethrown after all workers stop.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body);

}  // namespace mwlil
