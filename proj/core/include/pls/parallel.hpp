#pragma once

#include <cstddef>
#include <functional>

namespace pls {

/// Thread count used when a caller passes 0. Reads PLS_NUM_THREADS, falling
/// back to std::thread::hardware_concurrency().
unsigned default_thread_count();

/// Runs body(i) for i in [0, count) over a static block partition. Each index
/// is visited exactly once, so results written per index do not depend on
/// scheduling. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

}  // namespace pls
