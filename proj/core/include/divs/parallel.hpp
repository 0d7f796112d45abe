#pragma once

#include <cstddef>
#include <functional>

namespace divs {

// Runs `count` index-addressed tasks on `workers` threads. Tasks must write
// disjoint outputs; the call joins all workers before returning. Each worker
// owns one contiguous index range, so results are identical for any worker
// count as long as per-task work is order-independent across tasks.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace divs
