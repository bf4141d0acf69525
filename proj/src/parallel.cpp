#include "rankdte/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rankdte::par {

namespace {
std::atomic<bool>& flag() {
  static std::atomic<bool> on{[] {
    const char* env = std::getenv("RANKDTE_SERIAL");
    return !(env != nullptr && env[0] == '1');
  }()};
  return on;
}
}  // namespace

void set_enabled(bool on) { flag().store(on); }

bool enabled() { return flag().load(); }

int max_threads() {
#ifdef _OPENMP
  return enabled() ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

}  // namespace rankdte::par
