#pragma once

#include <cstddef>
#include <functional>

namespace earcap {

// 0 means "use the hardware thread count"; always at least 1.
int resolve_thread_count(int requested);

// Runs body(i) for i in [0, count) across up to `threads` workers. The
// schedule is work-stealing by atomic index; callers must make body(i)
// write only to slot i so results are independent of scheduling. The first
// exception thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace earcap
