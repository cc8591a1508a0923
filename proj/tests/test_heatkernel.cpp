#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/heatkernel.hpp"
#include "lqg/kernels.hpp"
#include "lqg/measure.hpp"
#include "lqg/parallel.hpp"
#include "lqg/walker.hpp"

using namespace lqg;

namespace {

struct FlatWorld {
  FieldStack stack;
  LiouvilleGrid measure;
};

FlatWorld flat_world(Vec2 origin, double side, std::uint32_t n) {
  Grid g{origin, side, n};
  auto params = make_params(0.5, 0.0, 2);
  StackSampler sampler(params, g);
  FlatWorld w;
  w.stack = sampler.sample(1, 0);
  w.measure = build_measure(w.stack, 0.0);
  return w;
}

}  // namespace

TEST_CASE("gamma = 0 on-diagonal estimate matches 1/(2 pi t)") {
  const auto w = flat_world({-3.0, -3.0}, 6.0, 256);
  OndiagOptions opts;
  opts.seed = 7;
  const double t = 0.1;
  const auto est =
      estimate_ondiag(w.measure, w.stack, {0, 0}, t, 0.05, 20000, opts);
  const double exact = 1.0 / (2.0 * std::numbers::pi * t);
  CHECK(std::abs(est.p_hat - exact) < 0.1 * exact + 3.0 * est.se);
  CHECK(est.killed_count == 0);
  CHECK(est.se > 0.0);
}

TEST_CASE("gamma = 0 envelope across t in [0.05, 0.5]") {
  const auto w = flat_world({-4.0, -4.0}, 8.0, 512);
  OndiagOptions opts;
  opts.seed = 11;
  std::vector<ReturnEstimate> est;
  for (double t : {0.05, 0.1, 0.2, 0.35, 0.5}) {
    const double rho = std::max(0.04, 0.12 * std::sqrt(t));
    est.push_back(
        estimate_ondiag(w.measure, w.stack, {0, 0}, t, rho, 8000, opts));
    const double exact = 1.0 / (2.0 * std::numbers::pi * t);
    CHECK(std::abs(est.back().p_hat - exact) < 0.1 * exact + 3.0 * est.back().se);
  }
  const auto rep = envelope_check(est);
  CHECK(rep.value == 1.0);
  CHECK(rep.aux.at("C1") > 0.0);
  CHECK(rep.aux.at("C3") > 0.0);
  CHECK_THROWS_AS((void)envelope_check({}), std::invalid_argument);
}

TEST_CASE("killed estimate never exceeds the free one") {
  const auto w = flat_world({-2.0, -2.0}, 4.0, 192);
  const double t = 0.08;
  OndiagOptions free_opts;
  free_opts.seed = 13;
  const auto free_est =
      estimate_ondiag(w.measure, w.stack, {0, 0}, t, 0.06, 6000, free_opts);
  OndiagOptions small = free_opts;
  small.mask = [](Vec2 p) { return p.norm() < 0.6; };
  const auto killed =
      estimate_ondiag(w.measure, w.stack, {0, 0}, t, 0.06, 6000, small);
  CHECK(killed.killed_count > 0);
  CHECK(killed.p_hat <= free_est.p_hat + 3.0 * (killed.se + free_est.se));
  // domain monotonicity: bigger disc dominates the smaller one
  OndiagOptions big = free_opts;
  big.mask = [](Vec2 p) { return p.norm() < 1.2; };
  const auto killed_big =
      estimate_ondiag(w.measure, w.stack, {0, 0}, t, 0.06, 6000, big);
  CHECK(killed.p_hat <= killed_big.p_hat + 3.0 * (killed.se + killed_big.se));
}

TEST_CASE("probe radius bias stays within the Taylor bound at gamma = 0") {
  const auto w = flat_world({-3.0, -3.0}, 6.0, 384);
  OndiagOptions opts;
  opts.seed = 17;
  opts.dt = 0.1 / 400.0;
  const double t = 0.1;
  const auto wide =
      estimate_ondiag(w.measure, w.stack, {0, 0}, t, 0.08, 20000, opts);
  const auto narrow =
      estimate_ondiag(w.measure, w.stack, {0, 0}, t, 0.04, 20000, opts);
  // sup |Hessian| of q_t at the origin is 1/(2 pi t^2)
  const double hess = 1.0 / (2.0 * std::numbers::pi * t * t);
  const double bound = hess * 0.08 * 0.08 / 4.0;
  CHECK(std::abs(wide.p_hat - narrow.p_hat) <
        bound + 3.0 * (wide.se + narrow.se));
}

TEST_CASE("dirichlet lower bound sits below the direct killed estimate") {
  const auto w = flat_world({-2.0, -2.0}, 4.0, 192);
  const double r = 1.0, t = 0.25;
  std::vector<ExitObservation> exits(4000);
  parallel_for(exits.size(), [&](std::int64_t k) {
    exits[k] = exit_ball({0, 0}, r, w.stack, 0.0, r * r / 400.0, 23, k);
  });
  const auto bound = dirichlet_lower_bound(w.measure, {0, 0}, r, t, exits);
  CHECK(bound.value > 0.0);
  CHECK(bound.aux.at("mass") == doctest::Approx(std::numbers::pi).epsilon(0.01));
  // direct killed estimate of p_{2t}
  OndiagOptions opts;
  opts.seed = 29;
  opts.mask = [r](Vec2 p) { return p.norm() < r; };
  const auto direct =
      estimate_ondiag(w.measure, w.stack, {0, 0}, 2.0 * t, 0.06, 8000, opts);
  CHECK(bound.value <= direct.p_hat + 3.0 * (bound.stderr_ + direct.se));
  // enormous t kills the bound entirely
  const auto zero = dirichlet_lower_bound(w.measure, {0, 0}, r, 100.0, exits);
  CHECK(zero.value == 0.0);
  CHECK(zero.aux.at("regime_ok") == 0.0);
}

TEST_CASE("rho_for_mass inverts the flat ball mass") {
  const auto w = flat_world({-2.0, -2.0}, 4.0, 256);
  const double target = 0.2;
  const double rho = rho_for_mass(w.measure, {0.1, -0.2}, target, 1.5);
  CHECK(ball_mass(w.measure, {0.1, -0.2}, rho) ==
        doctest::Approx(target).epsilon(0.01));
  // clamps at both ends
  CHECK(rho_for_mass(w.measure, {0, 0}, 1e-9, 1.5) ==
        doctest::Approx(2.0 * w.measure.grid.dx()));
  CHECK(rho_for_mass(w.measure, {0, 0}, 1e9, 1.5) == doctest::Approx(1.5));
}

TEST_CASE("gamma = 0 pointwise dimension is 2") {
  const auto w = flat_world({-3.0, -3.0}, 6.0, 256);
  OndiagOptions opts;
  opts.seed = 31;
  const std::vector<double> ts{0.01, 0.02, 0.04, 0.08, 0.16};
  const auto fit = pointwise_dimension(w.measure, w.stack, {0, 0}, ts, 8000, opts);
  CHECK(fit.n_points == 5);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS((void)pointwise_dimension(w.measure, w.stack, {0, 0},
                                            {0.1, 0.2, 0.3}, 100, opts),
                  std::invalid_argument);
}

TEST_CASE("estimates are deterministic across worker counts") {
  const auto w = flat_world({-2.0, -2.0}, 4.0, 128);
  OndiagOptions opts;
  opts.seed = 37;
  const auto a = estimate_ondiag(w.measure, w.stack, {0, 0}, 0.05, 0.08, 500, opts);
  set_worker_count(3);
  const auto b = estimate_ondiag(w.measure, w.stack, {0, 0}, 0.05, 0.08, 500, opts);
  set_worker_count(0);
  CHECK(a.hits == b.hits);
  CHECK(a.p_hat == b.p_hat);
}
