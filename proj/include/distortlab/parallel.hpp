#pragma once

#include <cstddef>
#include <functional>

namespace distortlab {

/// Worker count used by parallel_for. 0 (default) means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls body(i) for i in [0, count). Items are handed out in contiguous
/// chunks; body must only write to storage owned by item i. The first
/// exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace distortlab
