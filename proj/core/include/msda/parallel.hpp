#pragma once

#include <cstddef>
#include <functional>

namespace msda {

/// Run body(0..n-1) on up to `threads` worker threads (0 = hardware
/// concurrency). Indices are claimed in increasing order. If any call
/// throws, the exception from the lowest failing index is rethrown after
/// all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace msda
