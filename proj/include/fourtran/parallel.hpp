#pragma once

#include <cstddef>
#include <functional>

namespace fourtran {

/// Worker count used by library kernels. Defaults to FOURTRAN_THREADS when
/// set, else the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs task(i) for i in [0, n). Each index runs exactly once on some worker;
/// callers write disjoint outputs so results never depend on the split.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace fourtran
