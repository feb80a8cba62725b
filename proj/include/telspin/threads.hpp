#pragma once

#include <cstddef>
#include <functional>

// Thread-count resolution and a deterministic block scheduler.  Work is
// split into indexed blocks whose results the caller folds in index order,
// so the outcome is independent of the number of workers.

namespace telspin {

// Hardware concurrency capped by the TELEGRAPH_SPIN_THREADS environment
// variable when it parses to a positive integer; never less than 1.
int thread_count();

// Runs work(block) for every block in [0, n_blocks) across thread_count()
// workers.  Blocks are claimed atomically; the callable must only touch
// per-block state.  Exceptions propagate to the caller.
void parallel_for_blocks(std::size_t n_blocks,
                         const std::function<void(std::size_t)>& work);

}  // namespace telspin
