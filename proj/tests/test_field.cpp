#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/parallel.hpp"
#include "lqg/stats.hpp"

using namespace lqg;

namespace {

Grid small_grid(std::uint32_t n) { return Grid{{0.0, 0.0}, 1.0, n}; }

// Ensemble of one band, sampled in pairs (two fields per FFT).
std::vector<BandField> band_ensemble(const StackSampler& sampler, int band,
                                     std::size_t count, std::uint64_t seed) {
  std::vector<BandField> out(count);
  const double s2 = band_variance(sampler.params(), band);
  parallel_for(std::int64_t((count + 1) / 2), [&](std::int64_t pair) {
    auto fields = sampler.band(band).sample_pair(seed, pair);
    for (int w = 0; w < 2; ++w) {
      const std::size_t r = 2 * std::size_t(pair) + w;
      if (r < count)
        out[r] = BandField{band, sampler.grid(), std::move(fields[w]), s2};
    }
  });
  return out;
}

}  // namespace

TEST_CASE("sampled band matches the covariance quadrature oracle") {
  const auto params = make_params(1.0, 1.0, 5);
  const Grid grid = small_grid(32);
  StackSampler sampler(params, grid);
  const auto ensemble = band_ensemble(sampler, 3, 1000, 11);

  const double dx = grid.dx();
  const auto rep = validate_covariance(ensemble, params,
                                       {0.0, dx, 2 * dx, 4 * dx, 8 * dx});
  CHECK(rep.aux.at("flagged_lags") == 0.0);
  CHECK(rep.value < 4.0);
  // lag 0 recovers the band variance log(a_3/a_2) = log 2
  CHECK(rep.aux.at("lag0_target") == doctest::Approx(std::log(2.0)));
}

TEST_CASE("ensemble mean at a fixed cell is zero within 3 SE") {
  const auto params = make_params(1.0, 1.0, 4);
  StackSampler sampler(params, small_grid(16));
  const auto ensemble = band_ensemble(sampler, 2, 1000, 5);
  std::vector<double> at_cell(ensemble.size());
  for (std::size_t r = 0; r < ensemble.size(); ++r)
    at_cell[r] = ensemble[r].values[37];
  const auto m = stats::moments(at_cell);
  CHECK(std::abs(m.mean) < 3.0 * m.stderr_mean);
  CHECK(m.variance ==
        doctest::Approx(std::log(2.0)).epsilon(5.0 * m.stderr_mean));
}

TEST_CASE("far-lag covariance statistically indistinguishable from zero") {
  const auto params = make_params(1.0, 1.0, 5);
  const Grid grid = small_grid(32);
  StackSampler sampler(params, grid);
  const auto ensemble = band_ensemble(sampler, 5, 1000, 23);
  // band 5 has correlation scale ~1/16; lag 24 dx = 0.75 is far out
  const auto rep = validate_covariance(ensemble, params, {24.0 * grid.dx()});
  CHECK(std::abs(rep.aux.at("lag0_cov")) < 4.0 * rep.aux.at("lag0_se"));
}

TEST_CASE("shuffled-ensemble negative control") {
  const auto params = make_params(1.0, 1.0, 5);
  const Grid grid = small_grid(32);
  StackSampler sampler(params, grid);
  const auto ensemble = band_ensemble(sampler, 3, 1001, 29);
  const auto rep = validate_covariance(ensemble, params,
                                       {0.0, grid.dx(), 4 * grid.dx()}, true);
  CHECK(rep.aux.at("flagged_lags") == 0.0);
}

TEST_CASE("validate_covariance rejects small ensembles") {
  const auto params = make_params(1.0, 1.0, 3);
  StackSampler sampler(params, small_grid(8));
  const auto ensemble = band_ensemble(sampler, 1, 10, 3);
  CHECK_THROWS_AS(validate_covariance(ensemble, params, {0.0}),
                  std::invalid_argument);
}

TEST_CASE("stack with zero bands is identically zero") {
  const auto params = make_params(1.0, 1.0, 0);
  StackSampler sampler(params, small_grid(8));
  const auto stack = sampler.sample(1, 0);
  CHECK(stack.variance == 0.0);
  for (double v : stack.cumulative) CHECK(v == 0.0);
}

TEST_CASE("variance ledger telescopes for dyadic cutoffs") {
  const auto params = make_params(1.0, 1.0, 6);
  StackSampler sampler(params, small_grid(8));
  const auto stack = sampler.sample(1, 0);
  CHECK(stack.variance == doctest::Approx(6.0 * std::log(2.0)));
  double sum = 0.0;
  for (const auto& b : stack.bands) sum += b.sigma2;
  CHECK(sum == doctest::Approx(stack.variance));
}

TEST_CASE("cumulative field is the pointwise band sum") {
  const auto params = make_params(1.0, 1.0, 5);
  StackSampler sampler(params, small_grid(16));
  const auto stack = sampler.sample(77, 3);
  for (std::int64_t c = 0; c < 16 * 16; c += 7) {
    double sum = 0.0;
    for (const auto& b : stack.bands) sum += b.values[c];
    CHECK(stack.cumulative[c] == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("ensemble variance of the cumulative field approaches log a_N") {
  const auto params = make_params(1.0, 1.0, 5);
  StackSampler sampler(params, small_grid(16));
  const std::size_t count = 1000;
  std::vector<double> at_cell(count);
  parallel_for(std::int64_t(count / 2), [&](std::int64_t pair) {
    auto stacks = sampler.sample_pair(7, pair);
    at_cell[2 * pair] = stacks[0].cumulative[100];
    at_cell[2 * pair + 1] = stacks[1].cumulative[100];
  });
  const auto m = stats::moments(at_cell);
  const double target = 5.0 * std::log(2.0);
  const double se_var = m.variance * std::sqrt(2.0 / double(count - 1));
  CHECK(std::abs(m.variance - target) < 3.5 * se_var);
}

TEST_CASE("bands are mutually independent (whiteness across indices)") {
  const auto params = make_params(1.0, 1.0, 4);
  StackSampler sampler(params, small_grid(16));
  const std::size_t count = 1000;
  std::vector<std::vector<double>> per_band(4, std::vector<double>(count));
  parallel_for(std::int64_t(count / 2), [&](std::int64_t pair) {
    auto stacks = sampler.sample_pair(13, pair, true);
    for (int w = 0; w < 2; ++w)
      for (int b = 0; b < 4; ++b)
        per_band[b][2 * pair + w] = stacks[w].bands[b].values[50];
  });
  for (int b = 0; b + 1 < 4; ++b) {
    KahanSum cross;
    for (std::size_t r = 0; r < count; ++r)
      cross.add(per_band[b][r] * per_band[b + 1][r]);
    const double cov = cross.value() / double(count);
    const double se = std::sqrt(band_variance(params, b + 1) *
                                band_variance(params, b + 2) / double(count));
    CHECK(std::abs(cov) < 4.0 * se);
  }
}

TEST_CASE("bit-identical resampling regardless of worker count") {
  const auto params = make_params(1.0, 1.0, 4);
  StackSampler sampler(params, small_grid(16));
  set_worker_count(1);
  const auto a = sampler.sample(99, 5);
  set_worker_count(4);
  const auto b = sampler.sample(99, 5);
  set_worker_count(0);
  CHECK(a.cumulative == b.cumulative);

  // ensemble assembled through parallel_for: slots identical too
  std::vector<double> one(8), four(8);
  set_worker_count(1);
  parallel_for(8, [&](std::int64_t r) { one[r] = sampler.sample(3, r).cumulative[0]; });
  set_worker_count(4);
  parallel_for(8, [&](std::int64_t r) { four[r] = sampler.sample(3, r).cumulative[0]; });
  set_worker_count(0);
  CHECK(one == four);
}

TEST_CASE("field_at interpolation identities") {
  const auto params = make_params(1.0, 1.0, 2);
  const Grid grid = small_grid(8);
  StackSampler sampler(params, grid);
  auto stack = sampler.sample(4, 0);

  // cell centers reproduce stored values exactly
  for (std::int64_t j = 0; j < 8; j += 3)
    for (std::int64_t i = 0; i < 8; i += 3)
      CHECK(stack.at(grid.center(i, j)) == stack.cumulative[grid.index(i, j)]);

  // midpoint of two adjacent centers gives their average
  const Vec2 a = grid.center(2, 3), b = grid.center(3, 3);
  const Vec2 mid{0.5 * (a.x + b.x), a.y};
  CHECK(stack.at(mid) ==
        doctest::Approx(0.5 * (stack.cumulative[grid.index(2, 3)] +
                               stack.cumulative[grid.index(3, 3)])));

  // constant field interpolates to the constant anywhere
  std::fill(stack.cumulative.begin(), stack.cumulative.end(), 2.5);
  CHECK(stack.at({0.123, 0.987}) == doctest::Approx(2.5));
  CHECK(stack.at({0.004, 0.001}) == doctest::Approx(2.5));

  CHECK_THROWS_AS(stack.at({1.5, 0.5}), std::domain_error);
}

TEST_CASE("sampler diagnostics: no dense fallback, negligible clamping") {
  const auto params = make_params(1.0, 1.0, 5);
  StackSampler sampler(params, small_grid(32));
  for (int n = 1; n <= 5; ++n) {
    CHECK_FALSE(sampler.band(n).dense_fallback());
    CHECK(sampler.band(n).clamped_fraction() < 0.5);
  }
}
