#pragma once

#include <cstdint>
#include <functional>

namespace sigdr {

// Process-wide worker count. 0 selects std::thread::hardware_concurrency().
void set_worker_threads(int n);
int worker_threads();

// Runs f(i) for i in [0, n). Work items are claimed from a shared counter,
// so callers must write results to disjoint, pre-allocated slots; outputs
// are then independent of the worker count and of scheduling. Nested calls
// run sequentially on the calling worker.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f);

}  // namespace sigdr
