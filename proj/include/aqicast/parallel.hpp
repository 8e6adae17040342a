#pragma once

#include <cstddef>
#include <functional>

namespace aqicast {

/// Thread count from AQICAST_THREADS, falling back to hardware concurrency.
std::size_t default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Indices are handed
/// out dynamically, so body must only write to slot i of any shared output.
/// The first exception thrown by any worker is rethrown after all join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace aqicast
