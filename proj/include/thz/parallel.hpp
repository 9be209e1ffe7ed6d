#pragma once

#include <cstddef>

namespace thz {

/// Threads used by the library's parallel loops. Initialized from the
/// THZ_TOMO_THREADS environment variable when set, otherwise the runtime
/// default.
int thread_count();
void set_thread_count(int n);

/// Runs body(k) for k in [begin, end). Iterations must write disjoint outputs.
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, Body&& body) {
    const long long b = static_cast<long long>(begin);
    const long long e = static_cast<long long>(end);
#if defined(THZ_HAVE_OPENMP)
    const int threads = thread_count();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1 && e - b > 64)
    for (long long k = b; k < e; ++k) body(static_cast<std::size_t>(k));
#else
    for (long long k = b; k < e; ++k) body(static_cast<std::size_t>(k));
#endif
}

}  // namespace thz
