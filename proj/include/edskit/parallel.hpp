#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace edskit {

/// Worker count: EDSKIT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Calls fn(i) for i in [0, n). Work is split in contiguous blocks, so results
/// written by index are independent of the worker count. The first exception
/// thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace edskit
