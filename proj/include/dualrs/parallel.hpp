#pragma once

#include <functional>

namespace dualrs {

/// Worker count: DUALRS_THREADS when set (clamped to >= 1), otherwise the
/// hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [begin, end), fanned out over the worker threads in
/// contiguous blocks. Iterations must be independent; callers that reduce
/// should write per-index partials and combine them in index order, which
/// keeps results identical for any thread count.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace dualrs
