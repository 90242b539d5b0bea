#pragma once

#include <cstddef>
#include <functional>

namespace d2d {

/// Upper bound on worker threads used by the dense kernels. 0 means
/// hardware concurrency. Results never depend on this value.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once; chunks never overlap.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace d2d
