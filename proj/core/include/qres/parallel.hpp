#pragma once

#include <cstddef>
#include <functional>

namespace qres {

// Worker count from QRES_THREADS, otherwise the hardware concurrency (at least 1).
int worker_count();

// Runs body(i) for i in [0, n) on up to `workers` threads. Exceptions are rethrown after joining.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = worker_count());

}  // namespace qres
