// parallel.hpp — minimal fork/join helper driven by GMEMED_THREADS

#pragma once

#include <cstddef>
#include <functional>

namespace gmemed {

inline constexpr const char* thread_count_env = "GMEMED_THREADS";

/// Worker count: GMEMED_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls fn(begin, end) on disjoint chunks covering [0, n). Runs inline when
/// a single worker is configured or n is small.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_chunk = 64);

} // namespace gmemed
