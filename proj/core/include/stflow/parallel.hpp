#pragma once

#include <cstddef>
#include <functional>

namespace stflow {

/// Worker count used when a call site passes 0. Defaults to 1.
void set_default_threads(unsigned n);
unsigned default_threads();

/// Runs body(i) for i in [0, n) over contiguous blocks. Each index is visited exactly once,
/// so results written to per-index slots do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

}  // namespace stflow
