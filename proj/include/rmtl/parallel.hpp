#pragma once

#include <cstddef>
#include <functional>

namespace rmtl {

/// Runs body(i) for i in [0, count) across up to `threads` workers
/// (0 = hardware concurrency).  Work items must be independent and write
/// only to their own output slots, which keeps results identical for any
/// worker count.  The first exception thrown by a work item is rethrown.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace rmtl
