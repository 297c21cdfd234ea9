#pragma once

#include <functional>

namespace triflow {

// Worker count for element-parallel maps; honours the TRIFLOW_THREADS
// environment variable. Only pure per-index maps are parallelised, so results
// do not depend on the worker count.
int worker_count();

void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace triflow
