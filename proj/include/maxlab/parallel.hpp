#pragma once

#include <cstddef>
#include <functional>

namespace maxlab {

// Worker count: hardware concurrency capped by MAXLAB_THREADS when set.
unsigned thread_count();

// Runs body(i) for i in [begin, end) over contiguous chunks. Callers write to
// disjoint outputs, so results do not depend on the thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace maxlab
