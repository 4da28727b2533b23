#pragma once

#include <cstddef>
#include <functional>

namespace kinpot {

void set_thread_count(int n);
int thread_count();

// Runs body(begin, end) over disjoint chunks of [0, n). Results must not
// depend on the chunking; callers write disjoint outputs only.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kinpot
