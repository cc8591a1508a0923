#ifndef LQG_PARALLEL_HPP
#define LQG_PARALLEL_HPP

#include <cstdint>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

// OpenMP kernel wrapper with a serial reference path. Work items write to
// preallocated slots indexed by the loop variable and reductions happen
// afterwards in index order, so the parallel and serial paths are
// bit-identical.

namespace lqg {

int worker_count();
void set_worker_count(int n);

template <class F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
  if (worker_count() > 1) {
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

// Serial reference implementation, kept for parity tests and benchmarks.
template <class F>
void serial_for(std::int64_t n, F&& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

// Compensated (Kahan) accumulator; order-fixed reductions use it so that
// results do not drift with the summation split.
struct KahanSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace lqg

#endif
