#pragma once

#include <cstddef>
#include <functional>

namespace discunif
{

/// Worker count: hardware concurrency, capped by the DISC_UNIF_THREADS
/// environment variable when it is set to a positive integer.
std::size_t thread_count();

/// Runs body(begin, end) over a fixed partition of [0, n). Each index is
/// visited exactly once; the partition depends only on n and thread_count(),
/// so per-index results are reproducible.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace discunif
