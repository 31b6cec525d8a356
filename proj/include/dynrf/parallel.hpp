#pragma once

#include <functional>

namespace dynrf {

// Number of workers to use: explicit request, else the DYNRF_THREADS
// environment variable, else the hardware count.
int resolve_threads(int requested);

// Runs fn(block) for every block in [0, n_blocks) on up to `threads` workers.
// Each block executes serially and blocks touch disjoint state, so the result
// is independent of scheduling and thread count. Exceptions from workers are
// rethrown on the calling thread.
void parallel_blocks(int n_blocks, int threads, const std::function<void(int)>& fn);

}  // namespace dynrf
