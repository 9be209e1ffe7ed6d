#include "thz/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#if defined(THZ_HAVE_OPENMP)
#include <omp.h>
#endif

namespace thz {

namespace {

int initial_threads() {
    if (const char* env = std::getenv("THZ_TOMO_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (...) {
        }
    }
#if defined(THZ_HAVE_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::atomic<int>& threads_slot() {
    static std::atomic<int> slot{initial_threads()};
    return slot;
}

}  // namespace

int thread_count() { return threads_slot().load(); }

void set_thread_count(int n) { threads_slot().store(n < 1 ? 1 : n); }

}  // namespace thz
