#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fireflow {

/// Index loop over [0, n). The parallel variant distributes iterations with
/// OpenMP; bodies must only write to per-index slots. Reductions belong to
/// the caller, in a fixed order, so parallel and serial paths agree bitwise.
template <class F>
void parallel_for(int n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
#else
    for (int i = 0; i < n; ++i) body(i);
#endif
}

template <class F>
void serial_for(int n, F&& body) {
    for (int i = 0; i < n; ++i) body(i);
}

inline int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Caps the worker pool (0 keeps the runtime default). Results never depend
/// on this: per-item seeds and fixed-order reductions make every kernel
/// worker-count invariant.
inline void set_worker_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace fireflow
