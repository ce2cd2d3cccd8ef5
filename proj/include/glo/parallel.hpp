#pragma once

#include <cstddef>
#include <functional>

namespace glo {

/// Worker count for kernel loops: hardware concurrency, capped by the
/// GLO_THREADS environment variable when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs;
/// results are then identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace glo
