#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lqg/measure.hpp"
#include "lqg/parallel.hpp"
#include "lqg/stats.hpp"

using namespace lqg;

namespace {

FieldStack zero_stack(std::uint32_t n, int bands = 0) {
  FieldStack s;
  s.grid = Grid{{0.0, 0.0}, 1.0, n};
  s.params = make_params(1.0, 0.0, bands);
  s.cumulative.assign(std::size_t(n) * n, 0.0);
  s.variance = total_variance(s.params);
  return s;
}

}  // namespace

TEST_CASE("gamma 0 reproduces Lebesgue cell masses bit-exactly") {
  const auto stack = zero_stack(32);
  const auto m = build_measure(stack, 0.0);
  const double dx2 = (1.0 / 32.0) * (1.0 / 32.0);
  for (double v : m.mass) CHECK(v == dx2);
  CHECK(m.total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gamma at or above 2 is rejected") {
  const auto stack = zero_stack(8);
  CHECK_THROWS_AS(build_measure(stack, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(build_measure(stack, -0.1), std::invalid_argument);
}

TEST_CASE("parallel and serial measure builds are bit-identical") {
  const auto params = make_params(1.0, 1.0, 4);
  StackSampler sampler(params, Grid{{0.0, 0.0}, 1.0, 32});
  const auto stack = sampler.sample(17, 0);
  set_worker_count(4);
  const auto par = build_measure(stack, 1.0);
  set_worker_count(0);
  const auto ser = build_measure_reference(stack, 1.0);
  CHECK(par.mass == ser.mass);
  CHECK(par.total == ser.total);
}

TEST_CASE("ensemble mean of total mass is the box area") {
  const auto params = make_params(1.0, 1.0, 5);
  StackSampler sampler(params, Grid{{0.0, 0.0}, 1.0, 32});
  const std::size_t count = 1000;
  std::vector<double> totals(count);
  parallel_for(std::int64_t(count / 2), [&](std::int64_t pair) {
    const auto stacks = sampler.sample_pair(31, pair);
    totals[2 * pair] = build_measure(stacks[0], 1.0).total;
    totals[2 * pair + 1] = build_measure(stacks[1], 1.0).total;
  });
  const auto m = stats::moments(totals);
  CHECK(std::abs(m.mean - 1.0) < 3.5 * m.stderr_mean);
}

TEST_CASE("single realization at gamma 1.5 is positive and multifractal") {
  const auto params = make_params(1.0, 1.5, 6);
  StackSampler sampler(params, Grid{{0.0, 0.0}, 1.0, 64});
  const auto m = build_measure(sampler.sample(3, 0), 1.5);
  CHECK(m.total > 0.0);
  const auto [lo, hi] = std::minmax_element(m.mass.begin(), m.mass.end());
  CHECK(*lo > 0.0);
  CHECK(std::isfinite(*hi));
  MESSAGE("max/min cell-mass ratio: ", *hi / *lo);
}

TEST_CASE("Lebesgue ball mass") {
  const auto m = build_measure(zero_stack(128), 0.0);
  const double got = ball_mass(m, {0.5, 0.5}, 0.25);
  CHECK(got == doctest::Approx(std::numbers::pi * 0.0625).epsilon(0.01));
}

TEST_CASE("ball mass monotone in radius and additive over annuli") {
  const auto params = make_params(1.0, 1.0, 5);
  StackSampler sampler(params, Grid{{0.0, 0.0}, 1.0, 128});
  const auto m = build_measure(sampler.sample(5, 0), 1.0);
  double prev = 0.0;
  for (double r = 0.05; r <= 0.4; r += 0.05) {
    const double v = ball_mass(m, {0.5, 0.5}, r);
    CHECK(v >= prev);
    prev = v;
  }
  // annulus additivity up to boundary sub-sampling error
  const double inner = ball_mass(m, {0.5, 0.5}, 0.2);
  const double outer = ball_mass(m, {0.5, 0.5}, 0.4);
  CHECK(outer - inner >= -1e-12);
}

TEST_CASE("ball mass preconditions") {
  const auto m = build_measure(zero_stack(32), 0.0);
  CHECK_THROWS_AS(ball_mass(m, {0.5, 0.5}, 1.9 / 32.0), std::invalid_argument);
  CHECK_THROWS_AS(ball_mass(m, {0.9, 0.5}, 0.25), std::domain_error);
}

TEST_CASE("uniform sampling at gamma 0 passes a chi-square test") {
  const auto m = build_measure(zero_stack(64), 0.0);
  MeasureSampler sampler(m);
  const std::size_t draws = 20000;
  std::vector<double> counts(16, 0.0);
  for (std::size_t k = 0; k < draws; ++k) {
    const Vec2 p = sampler.draw(11, k);
    const int bi = std::min(3, int(p.x * 4.0));
    const int bj = std::min(3, int(p.y * 4.0));
    counts[bj * 4 + bi] += 1.0;
  }
  const std::vector<double> expected(16, double(draws) / 16.0);
  const double chi2 = stats::chi2_statistic(counts, expected);
  CHECK(stats::chi2_sf(chi2, 15) > 0.01);
}

TEST_CASE("point mass draws always land in that cell") {
  auto m = build_measure(zero_stack(8), 0.0);
  std::fill(m.mass.begin(), m.mass.end(), 0.0);
  m.mass[27] = 1.0;
  m.total = 1.0;
  MeasureSampler sampler(m);
  for (std::uint64_t k = 0; k < 100; ++k) CHECK(sampler.draw_cell(5, k) == 27);
}

TEST_CASE("cell frequencies match masses within 4 SE") {
  const auto params = make_params(1.0, 1.0, 3);
  StackSampler sampler(params, Grid{{0.0, 0.0}, 1.0, 8});
  const auto m = build_measure(sampler.sample(9, 0), 1.0);
  MeasureSampler ms(m);
  const std::size_t draws = 100000;
  std::vector<double> counts(64, 0.0);
  for (std::size_t k = 0; k < draws; ++k) counts[ms.draw_cell(21, k)] += 1.0;
  for (int c = 0; c < 64; ++c) {
    const double p = m.mass[c] / m.total;
    const double se = std::sqrt(p * (1.0 - p) * double(draws));
    CHECK(std::abs(counts[c] - p * draws) <= 4.0 * se + 1.0);
  }
}

TEST_CASE("volume exponent of Lebesgue is 2") {
  const auto m = build_measure(zero_stack(512), 0.0);
  const std::vector<double> radii{1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4};
  const auto fit = volume_exponent_fit(m, {0.5, 0.5}, radii);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.025));
  CHECK(fit.r2 > 0.999);
}

TEST_CASE("volume exponent fit needs at least 4 radii") {
  const auto m = build_measure(zero_stack(64), 0.0);
  CHECK_THROWS_AS(volume_exponent_fit(m, {0.5, 0.5}, {0.1, 0.2, 0.3}),
                  std::invalid_argument);
}

TEST_CASE("exponent band constants") {
  CHECK(volume_alpha1(1.0) == doctest::Approx(4.5));
  CHECK(volume_alpha2(1.0) == doctest::Approx(0.5));
  CHECK(xi_tilde(1.0, 1.0) == doctest::Approx(3.0));
  CHECK(xi_tilde(0.0, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("negative moments of Lebesgue are exact") {
  const auto m = build_measure(zero_stack(128), 0.0);
  std::vector<LiouvilleGrid> ensemble(200, m);
  const std::vector<double> radii{1.0 / 16, 1.0 / 8, 1.0 / 4};
  const auto rep = negative_moment(ensemble, 1.0, {0.5, 0.5}, radii);
  const double want = 1.0 / (std::numbers::pi * 0.25 * 0.25);
  CHECK(rep.value == doctest::Approx(want).epsilon(0.01));
  CHECK(rep.aux.at("slope") == doctest::Approx(2.0).epsilon(0.02));

  const auto unit = negative_moment(ensemble, 0.0, {0.5, 0.5}, radii);
  CHECK(unit.value == doctest::Approx(1.0));
}

TEST_CASE("negative moment requires 200 replicates") {
  const auto m = build_measure(zero_stack(32), 0.0);
  std::vector<LiouvilleGrid> ensemble(10, m);
  CHECK_THROWS_AS(negative_moment(ensemble, 1.0, {0.5, 0.5}, {0.25}),
                  std::invalid_argument);
}

TEST_CASE("doubling holds everywhere for Lebesgue") {
  const auto m = build_measure(zero_stack(256), 0.0);
  std::vector<Vec2> points{{0.5, 0.5}, {0.3, 0.6}, {0.7, 0.4}};
  const std::vector<double> radii{1.0 / 64, 1.0 / 32, 1.0 / 16};
  const auto rep = doubling_check(m, points, radii, 2.5);
  CHECK(rep.value == 0.0);
}

TEST_CASE("doubling rejects kappa at or below 2") {
  const auto m = build_measure(zero_stack(64), 0.0);
  CHECK_THROWS_AS(doubling_check(m, {{0.5, 0.5}}, {0.1}, 2.0),
                  std::invalid_argument);
}
