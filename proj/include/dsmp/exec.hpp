#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dsmp::exec {

// Global switch between the OpenMP kernels and the serial reference path.
// Results are bitwise identical either way: parallel loops only touch
// per-index state, and every reduction is done serially in index order.
inline bool& parallel_flag() {
    static bool flag = true;
    return flag;
}

inline void set_parallel(bool on) { parallel_flag() = on; }
inline bool parallel_enabled() { return parallel_flag(); }

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

template <typename F>
void parallel_for(int n, F&& body) {
#if defined(_OPENMP)
    if (parallel_enabled()) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    for (int i = 0; i < n; ++i) body(i);
}

}  // namespace dsmp::exec
