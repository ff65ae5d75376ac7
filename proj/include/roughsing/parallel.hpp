#pragma once

#include <cstddef>
#include <functional>

namespace roughsing {

// Worker-pool width used by parallel_for. 1 = serial. Set once by the CLI
// (--threads / ROUGHSING_THREADS); experiments must aggregate results in a
// deterministic order regardless of this value.
void set_thread_count(int n);
int thread_count();

// Static partition of [begin, end) over thread_count() workers.
// body must be safe to call concurrently on disjoint indices.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

} // namespace roughsing
