#pragma once

#include <cstddef>
#include <functional>

namespace xdiff::harness {

/// Worker cap: XDIFF_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();

/// Runs task(0..count-1) on up to worker_count() threads. Rethrows the first exception.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace xdiff::harness
