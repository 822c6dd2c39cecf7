#ifndef OMNISAL_THREADING_HPP
#define OMNISAL_THREADING_HPP

#include <functional>

namespace omnisal {

/// Number of worker threads used by parallel loops. Defaults to
/// OMNISAL_THREADS if set, otherwise the hardware concurrency.
int thread_count();

/// Cap internal parallelism. n < 1 resets to the default.
void set_thread_count(int n);

/// Runs fn(i) for i in [begin, end). Every index is computed independently,
/// so results are bitwise identical for any thread count. Nested calls run
/// serially.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

} // namespace omnisal

#endif
