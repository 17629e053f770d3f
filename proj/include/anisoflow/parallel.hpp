#pragma once

#include <cstddef>
#include <functional>

namespace anisoflow {

// Upper bound on worker threads for elementwise kernels. 0 means
// hardware_concurrency. Reductions always run serially so results do not
// depend on the thread count.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Reads ANISOFLOW_THREADS; malformed values are ignored.
void configure_threads_from_env();

// Calls body(begin, end) over disjoint chunks of [0, n). Runs inline for small
// n or when only one thread is allowed.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace anisoflow
