#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isomon {

inline bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

inline int hardware_jobs() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Run body(i) for i in [0, n).  jobs <= 1 runs the serial reference path;
// otherwise OpenMP threads are used.  body must write only to its own slot
// of any shared output, so serial and parallel runs produce identical
// results and are combined deterministically by index.
template <class F>
void parallel_for(int n, int jobs, F&& body) {
    if (jobs <= 1 || !openmp_enabled() || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) body(i);
#endif
}

} // namespace isomon
