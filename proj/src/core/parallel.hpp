#pragma once

#include <cstddef>
#include <functional>

namespace posehmm {

// Worker cap for parallel_for. 0 means hardware concurrency. Thread count
// never affects results: work items are independent and each writes only
// its own output slot; reductions happen afterwards in index order.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Work is pulled from a shared counter by up to
// thread_count() workers. The first exception thrown by any fn is rethrown
// on the calling thread after all workers join.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace posehmm
