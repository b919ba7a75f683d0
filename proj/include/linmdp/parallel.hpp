#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace linmdp {

/// Runs body(i) for i in [0, n). Every index writes only its own output slot,
/// so results do not depend on the thread count. serial forces one thread.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body, bool serial = false) {
  if (serial || n < 2) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace linmdp
