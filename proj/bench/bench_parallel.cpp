// Timing comparison of the OpenMP kernels against their serial references,
// plus a parity check that both paths agree bit for bit.
#include <chrono>
#include <cstdio>
#include <cstring>

#include "lqg/field.hpp"
#include "lqg/measure.hpp"
#include "lqg/parallel.hpp"
#include "lqg/walker.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

template <class F>
double timed(F&& f) {
  const auto t0 = Clock::now();
  f();
  return seconds(t0, Clock::now());
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint32_t n = argc > 1 ? std::uint32_t(std::atoi(argv[1])) : 1024;
  lqg::Grid g{{0, 0}, 1.0, n};
  lqg::StackSampler sampler(lqg::make_params(1.0, 1.0,
                                             lqg::bands_for_spacing(g.dx())),
                            g);
  std::printf("grid %u^2, %d bands, %d workers\n", n,
              sampler.params().band_count(), lqg::worker_count());

  lqg::FieldStack stack;
  const double t_sample = timed([&] { stack = sampler.sample(1, 0, false); });
  std::printf("%-28s %8.3f s\n", "sample stack (parallel)", t_sample);

  lqg::LiouvilleGrid mp, ms;
  const double t_mp = timed([&] { mp = lqg::build_measure(stack, 1.0); });
  const double t_ms =
      timed([&] { ms = lqg::build_measure_reference(stack, 1.0); });
  const bool parity =
      std::memcmp(mp.mass.data(), ms.mass.data(), mp.mass.size() * 8) == 0 &&
      mp.total == ms.total;
  std::printf("%-28s %8.3f s\n", "build measure (parallel)", t_mp);
  std::printf("%-28s %8.3f s   speedup %.2fx, parity %s\n",
              "build measure (serial)", t_ms, t_ms / t_mp,
              parity ? "ok" : "MISMATCH");

  const int walkers = 2000;
  std::vector<double> taus_p(walkers), taus_s(walkers);
  auto kernel = [&](std::vector<double>& out) {
    return [&, out = &out](std::int64_t k) {
      (*out)[k] = lqg::exit_ball({0.5, 0.5}, 0.25, stack, 1.0,
                                 0.25 * 0.25 / 400, 7, k)
                      .liouville_time;
    };
  };
  const double t_wp =
      timed([&] { lqg::parallel_for(walkers, kernel(taus_p)); });
  const double t_ws = timed([&] { lqg::serial_for(walkers, kernel(taus_s)); });
  const bool wparity = taus_p == taus_s;
  std::printf("%-28s %8.3f s\n", "exit walkers (parallel)", t_wp);
  std::printf("%-28s %8.3f s   speedup %.2fx, parity %s\n",
              "exit walkers (serial)", t_ws, t_ws / t_wp,
              wparity ? "ok" : "MISMATCH");
  return parity && wparity ? 0 : 1;
}
