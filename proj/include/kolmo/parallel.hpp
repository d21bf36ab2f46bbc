#pragma once

#include <cstddef>
#include <functional>

namespace kolmo {

/// Worker count used by parallel_for (default 1).
void set_threads(int n);
int threads();

/// Runs body(i) for i in [0, n). Each index is processed exactly once; results
/// must be written to per-index slots so output is independent of the worker count.
/// If bodies throw, the exception of the smallest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace kolmo
