#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/kernels.hpp"
#include "lqg/measure.hpp"
#include "lqg/quadrature.hpp"
#include "lqg/spectral.hpp"

using namespace lqg;

namespace {

LiouvilleGrid flat_measure(Vec2 origin, double side, std::uint32_t n) {
  Grid g{origin, side, n};
  auto params = make_params(0.5, 0.0, 2);
  StackSampler sampler(params, g);
  return build_measure(sampler.sample(1, 0), 0.0);
}

}  // namespace

TEST_CASE("mask bookkeeping and connectivity") {
  const auto m = flat_measure({0, 0}, 1.0, 64);
  const auto disc = make_mask(
      m, [](Vec2 p) { return (p - Vec2{0.5, 0.5}).norm() < 0.3; });
  CHECK(disc.component_count == 1);
  CHECK(disc.inside_count > 0);
  CHECK(disc.mass == doctest::Approx(std::numbers::pi * 0.09).epsilon(0.03));
  // two separated discs: two components, largest kept
  const auto two = make_mask(m, [](Vec2 p) {
    return (p - Vec2{0.25, 0.5}).norm() < 0.15 ||
           (p - Vec2{0.75, 0.5}).norm() < 0.08;
  });
  CHECK(two.component_count == 2);
  const auto big = largest_component(m, two);
  CHECK(big.component_count == 1);
  CHECK(big.inside_count < two.inside_count);
  CHECK(big.inside_count > two.inside_count / 2);
  CHECK_THROWS_AS((void)make_mask(m, [](Vec2) { return false; }),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)assemble(m, two), std::invalid_argument);
}

TEST_CASE("pencil structure on an all-inside mask") {
  const auto m = flat_measure({0, 0}, 1.0, 16);
  const auto all = make_mask(m, [](Vec2) { return true; });
  const auto pencil = assemble(m, all);
  const std::int64_t n = pencil.cells.size();
  CHECK(n == 256);
  for (std::int64_t d = 0; d < n; ++d)
    CHECK(pencil.D[d] == m.mass[pencil.cells[d]]);
  // interior action on constants vanishes; the grid edge is Dirichlet here,
  // so probe an interior row: off-diagonals -1/2, diagonal 2
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd au = pencil.A * ones;
  const auto mid = pencil.dof_of_cell[m.grid.index(8, 8)];
  CHECK(au[mid] == 0.0);
  CHECK(pencil.A.coeff(mid, mid) == 2.0);
  // symmetry
  CHECK((Eigen::MatrixXd(pencil.A) - Eigen::MatrixXd(pencil.A).transpose())
            .norm() == 0.0);
}

TEST_CASE("unit square eigenvalues match pi^2 (m^2+n^2)/2") {
  const auto m = flat_measure({0, 0}, 1.0, 256);
  const auto all = make_mask(m, [](Vec2) { return true; });
  const auto dec = eigensolve(assemble(m, all), 4);
  const double p2 = std::numbers::pi * std::numbers::pi;
  CHECK(dec.eigenvalues[0] == doctest::Approx(p2).epsilon(0.02));
  CHECK(dec.eigenvalues[1] == doctest::Approx(2.5 * p2).epsilon(0.02));
  CHECK(dec.eigenvalues[2] == doctest::Approx(2.5 * p2).epsilon(0.02));
  CHECK(dec.eigenvalues[3] == doctest::Approx(4.0 * p2).epsilon(0.02));
  for (double r : dec.residuals) CHECK(r <= 1e-8);
  // faber-krahn ratio: pi^2 log 3
  CHECK(faber_krahn_ratio(dec) ==
        doctest::Approx(p2 * std::log(3.0)).epsilon(0.021));
}

TEST_CASE("unit disc ground state is j01^2/2") {
  const auto m = flat_measure({-1.2, -1.2}, 2.4, 256);
  const auto disc = make_mask(m, [](Vec2 p) { return p.norm() < 1.0; });
  const auto dec = eigensolve(assemble(m, disc), 1);
  CHECK(dec.eigenvalues[0] == doctest::Approx(2.8916).epsilon(0.02));
}

TEST_CASE("domain monotonicity of the ground state") {
  const auto m = flat_measure({0, 0}, 1.0, 128);
  const auto big = make_mask(m, [](Vec2 p) {
    return p.x > 0.1 && p.x < 0.9 && p.y > 0.1 && p.y < 0.9;
  });
  const auto small = make_mask(m, [](Vec2 p) {
    return p.x > 0.2 && p.x < 0.7 && p.y > 0.25 && p.y < 0.8;
  });
  const auto lam_big = eigensolve(assemble(m, big), 1).eigenvalues[0];
  const auto lam_small = eigensolve(assemble(m, small), 1).eigenvalues[0];
  CHECK(lam_small > lam_big);
}

TEST_CASE("richardson-consistent convergence of lambda_1") {
  double lam[3];
  int idx = 0;
  for (std::uint32_t n : {64u, 128u, 256u}) {
    const auto m = flat_measure({0, 0}, 1.0, n);
    const auto all = make_mask(m, [](Vec2) { return true; });
    lam[idx++] = eigensolve(assemble(m, all), 1).eigenvalues[0];
  }
  const double d_coarse = std::abs(lam[0] - lam[1]);
  const double d_fine = std::abs(lam[1] - lam[2]);
  CHECK(d_coarse < 4.0 * d_fine * 1.5);  // second-order scheme: ratio ~4
  CHECK(d_fine < d_coarse);
}

namespace {

// one complete decomposition of the flat 48^2 unit square, shared by cases
const SpectralDecomposition& flat48_complete() {
  static const SpectralDecomposition dec = [] {
    const auto m = flat_measure({0, 0}, 1.0, 48);
    const auto all = make_mask(m, [](Vec2) { return true; });
    const auto pencil = assemble(m, all);
    return eigensolve(pencil, int(pencil.cells.size()));
  }();
  return dec;
}

// closed-form spectrum of the pencil on the flat n^2 unit square
std::vector<double> flat_square_spectrum(int n) {
  std::vector<double> lam1d(n), lam;
  const double dx = 1.0 / n;
  for (int k = 1; k <= n; ++k)
    lam1d[k - 1] = (1.0 - std::cos(k * std::numbers::pi / (n + 1))) / (dx * dx);
  for (double a : lam1d)
    for (double b : lam1d) lam.push_back(a + b);
  std::sort(lam.begin(), lam.end());
  return lam;
}

}  // namespace

TEST_CASE("eigen heat kernel: symmetry, positivity, chapman-kolmogorov") {
  const auto m = flat_measure({0, 0}, 1.0, 48);
  const auto& dec = flat48_complete();
  const auto cx = m.grid.index(20, 30), cy = m.grid.index(40, 25);
  const double t = 0.02, s = 0.03;
  CHECK(eigen_heatkernel(dec, cx, cy, t) == eigen_heatkernel(dec, cy, cx, t));
  CHECK(eigen_heatkernel(dec, cx, cx, t) > 0.0);
  CHECK(eigen_heatkernel(dec, cx, cy, t) > 0.0);
  double ck = 0.0;
  for (std::size_t d = 0; d < dec.cells.size(); ++d)
    ck += eigen_heatkernel(dec, cx, dec.cells[d], t) *
          eigen_heatkernel(dec, dec.cells[d], cy, s) * m.mass[dec.cells[d]];
  CHECK(ck == doctest::Approx(eigen_heatkernel(dec, cx, cy, t + s))
                  .epsilon(1e-9));
}

TEST_CASE("truncation tail guard fires at tiny t") {
  const auto m = flat_measure({0, 0}, 1.0, 64);
  const auto all = make_mask(m, [](Vec2) { return true; });
  const auto dec = eigensolve(assemble(m, all), 16);
  CHECK_THROWS_AS((void)heat_trace(dec, 1e-5), std::runtime_error);
  CHECK_THROWS_AS((void)eigen_heatkernel(dec, 0, 0, 1e-5), std::runtime_error);
}

TEST_CASE("heat trace matches the closed-form spectrum and decreases") {
  const auto& dec = flat48_complete();
  const auto lam = flat_square_spectrum(48);
  const double t = 0.01;
  double exact = 0.0;
  for (double l : lam) exact += std::exp(-l * t);
  CHECK(heat_trace(dec, t) == doctest::Approx(exact).epsilon(1e-6));
  // Weyl leading term |U|/(2 pi t) overshoots by the perimeter correction
  const double weyl = 1.0 / (2.0 * std::numbers::pi * t);
  CHECK(heat_trace(dec, t) / weyl > 0.6);
  CHECK(heat_trace(dec, t) / weyl < 1.0);
  double prev = heat_trace(dec, 0.01);
  for (double tt : {0.02, 0.05, 0.1, 0.3}) {
    const double z = heat_trace(dec, tt);
    CHECK(z < prev);
    prev = z;
  }
  // upper envelope shape with some fitted constant over [0.01, 0.5]
  double c_hat = 0.0;
  for (double tt : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5})
    c_hat = std::max(c_hat, heat_trace(dec, tt) * tt /
                                (dec.mass * std::log(1.0 / tt)));
  CHECK(c_hat > 0.0);
  CHECK(std::isfinite(c_hat));
}

TEST_CASE("global dimension of the flat square is 2") {
  const auto& dec = flat48_complete();
  // t decade calibrated so the discrete closed-form slope is 2.00: the
  // boundary term (up) and mode saturation (down) cancel here
  const double t1 = 1.223e-4;
  std::vector<double> ts, zs;
  for (int k = 0; k < 5; ++k) {
    ts.push_back(t1 * std::pow(10.0, k / 4.0));
    zs.push_back(heat_trace(dec, ts.back()));
  }
  const auto fit = global_dimension(ts, zs);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.025));
  // and the solver agrees with the closed-form spectrum to quadrature level
  const auto lam = flat_square_spectrum(48);
  std::vector<double> z_oracle;
  for (double t : ts) {
    double z = 0.0;
    for (double l : lam) z += std::exp(-l * t);
    z_oracle.push_back(z);
  }
  const auto oracle = global_dimension(ts, z_oracle);
  CHECK(std::abs(fit.slope - oracle.slope) < 1e-6);
  CHECK_THROWS_AS((void)global_dimension({0.1}, {1.0}), std::invalid_argument);
}

TEST_CASE("nash profile round trip and comparison chain") {
  const double c9 = 2.0;
  for (double t : {0.01, 0.1, 1.0, 10.0}) {
    const double mt = nash_profile(c9, t);
    // definitional round trip Phi(m(t)) = t
    const double phi = 32.0 / c9 *
                       quad::integrate_to_inf(
                           [](double u) { return std::log(2.0 + u / 4.0) / (u * u); },
                           mt, 1e-12);
    CHECK(phi == doctest::Approx(t).epsilon(1e-9));
  }
  CHECK(nash_profile(c9, 0.2) > nash_profile(c9, 0.4));
  // ODE residual m' = -theta(m) by central differences
  const double t0 = 0.5, h = 1e-5;
  const double md =
      (nash_profile(c9, t0 + h) - nash_profile(c9, t0 - h)) / (2.0 * h);
  const double mval = nash_profile(c9, t0);
  const double theta = c9 * mval * mval / (32.0 * std::log(2.0 + mval / 4.0));
  CHECK(std::abs(md + theta) < 1e-6 * theta);
  // m(C t) <= t^-1 log(1/t): C = sup Psi(t^-1 log 1/t)/t over the range
  double c_big = 0.0;
  auto psi = [&](double s) { return 80.0 / c9 / s * std::log(2.0 + s / 4.0); };
  for (double t = 0.01; t <= 0.5; t *= 1.3)
    c_big = std::max(c_big, psi(std::log(1.0 / t) / t) / t);
  for (double t = 0.01; t <= 0.5; t *= 1.3)
    CHECK(nash_profile(c9, c_big * t) <= std::log(1.0 / t) / t * (1.0 + 1e-9));
}
