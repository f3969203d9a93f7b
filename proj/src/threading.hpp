#pragma once

#include <cstddef>
#include <functional>

namespace nstr {

// Worker count for intra-stage parallelism: min(NSTR_THREADS, hardware),
// where NSTR_THREADS=0 or unset means auto.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks so each
// index is processed exactly once; fn must only write to slots owned by its
// index, which keeps results identical to the serial order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nstr
