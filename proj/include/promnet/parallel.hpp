#pragma once

#include <cstdint>
#include <functional>

namespace promnet {

// Worker cap shared by every parallel loop in the engine. Defaults to the
// PROMNET_THREADS environment variable, then to the hardware thread count.
int num_threads();
void set_num_threads(int n);

// Runs fn over contiguous [begin,end) chunks of 0..n. Callers must compute
// each index independently of the chunking, which makes results identical for
// any worker count. Nested calls run serially.
void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace promnet
