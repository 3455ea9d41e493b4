#pragma once

#include <cstddef>
#include <functional>

namespace ahr {

/// Runs body(0..count-1) on up to `threads` workers (0 = hardware concurrency).
/// Work items are claimed dynamically, so bodies must write only to their own
/// slot; the first exception thrown by any body is rethrown after all workers
/// have joined.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace ahr
