#pragma once

#include <atomic>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eckn {

namespace detail {
inline std::atomic<int> g_max_threads{0};
}

// Global cap on worker threads used by parallel_for; 0 = OpenMP default.
inline void set_max_threads(int n) { detail::g_max_threads.store(n); }
inline int max_threads() { return detail::g_max_threads.load(); }

// Runs body(i) for i in [0, n). Every iteration writes only its own output
// slot, so results are bit-identical for any thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    const int cap = max_threads();
    const int nt = cap > 0 ? cap : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        body(static_cast<std::size_t>(i));
    }
#else
    for (std::size_t i = 0; i < n; ++i) {
        body(i);
    }
#endif
}

} // namespace eckn
