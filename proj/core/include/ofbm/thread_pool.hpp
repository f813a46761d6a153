#pragma once

#include <functional>

namespace ofbm {

// Worker count: OFBM_THREADS if set and positive (clamped to 256), otherwise
// std::thread::hardware_concurrency(), otherwise 1.
int thread_count();

// Runs fn(chunk) for chunk = 0..n_chunks-1 across thread_count() workers, with
// chunks claimed from a shared atomic counter. Callers must write results only
// into chunk-indexed storage and combine partials in chunk order afterwards;
// outputs are then identical for any worker count. The first exception thrown
// by fn is rethrown on the calling thread after all workers finish.
void parallel_chunks(int n_chunks, const std::function<void(int)>& fn);

}  // namespace ofbm
