#include "lqg/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lqg {

namespace {
int default_workers() {
  if (const char* env = std::getenv("LQG_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int> g_workers{0};
}  // namespace

int worker_count() {
  int n = g_workers.load(std::memory_order_relaxed);
  if (n <= 0) {
    n = default_workers();
    g_workers.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_worker_count(int n) {
  g_workers.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

}  // namespace lqg
