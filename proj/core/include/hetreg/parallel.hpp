#pragma once

// Deterministic task parallelism: run fn(i) for i in [0, n) on up to `jobs`
// threads.  Each task writes only to its own output slot and derives its own
// seed from its index, so results are byte-identical for any jobs value.
// jobs <= 0 means "use hardware concurrency".

#include <cstddef>
#include <functional>

namespace hetreg {

int resolve_jobs(int jobs);

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace hetreg
