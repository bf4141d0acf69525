#ifndef RANKDTE_PARALLEL_HPP
#define RANKDTE_PARALLEL_HPP

#include <cstdint>

namespace rankdte::par {

// Global switch for the OpenMP kernels.  All parallel loops in the library
// write to disjoint pre-allocated slots and reductions run serially over
// those slots, so enabling or disabling parallelism never changes results.
void set_enabled(bool on);
bool enabled();

int max_threads();

// Parallel index loop over [0, n).  `body` must only touch slot i.
template <class F>
void for_each_index(std::int64_t n, F&& body) {
  if (enabled() && n > 1) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
}

// Serial reference for the loop above; kept so tests and the benchmark can
// compare the OpenMP path against it.
template <class F>
void for_each_index_serial(std::int64_t n, F&& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace rankdte::par

#endif  // RANKDTE_PARALLEL_HPP
