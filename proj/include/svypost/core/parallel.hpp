#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace svypost {

/// Thread count from SVYPOST_THREADS, or 1 when unset or invalid.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; the first exception thrown by any worker is rethrown
/// after all workers join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace svypost
