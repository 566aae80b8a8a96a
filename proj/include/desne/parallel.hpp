#pragma once

#include <cstddef>
#include <functional>

namespace desne {

// Runs fn(begin, end) over [0, n) split into one contiguous block per
// worker. Callers must keep per-index work independent so the result is
// identical for any worker count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// Default worker count for the CLI (--threads 0 means "all cores").
int hardware_threads();

} // namespace desne
