#ifndef LQG_MEASURE_HPP
#define LQG_MEASURE_HPP

#include <cstdint>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/grid.hpp"
#include "lqg/report.hpp"

namespace lqg {

// Approximating Liouville measure M_N on the grid: immutable snapshot of
// per-cell masses exp(gamma X_N(c) - gamma^2/2 v_N) dx^2.
struct LiouvilleGrid {
  Grid grid;
  double gamma = 0.0;
  int band_count = 0;
  double variance = 0.0;  // v_N carried from the stack
  std::vector<double> mass;
  double total = 0.0;
};

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  double r_min = 0.0, r_max = 0.0;
};

LiouvilleGrid build_measure(const FieldStack& stack, double gamma);

// Serial reference for the parallel cell loop, kept for parity tests.
LiouvilleGrid build_measure_reference(const FieldStack& stack, double gamma);

// Mass of B(x,r): full cells by center test, boundary cells weighted by a
// 4x4 sub-sampled area fraction. Requires r >= 2 dx and the ball inside the
// grid extent.
double ball_mass(const LiouvilleGrid& m, Vec2 x, double r);

// Measure-weighted point sampling (cell by cumulative mass, uniform jitter
// within the cell). Draws are keyed by (seed, index) and scheduling-free.
class MeasureSampler {
 public:
  explicit MeasureSampler(const LiouvilleGrid& m);
  Vec2 draw(std::uint64_t seed, std::uint64_t index) const;
  std::int64_t draw_cell(std::uint64_t seed, std::uint64_t index) const;

 private:
  const LiouvilleGrid* m_;
  std::vector<double> cumulative_;
};

// OLS fit of log M(B(x,r)) against log r over the given radii (>= 4).
ExponentFit volume_exponent_fit(const LiouvilleGrid& m, Vec2 x,
                                const std::vector<double>& radii);

// Reference exponent band of the volume decay estimates.
double volume_alpha1(double gamma);  // (gamma+2)^2 / 2
double volume_alpha2(double gamma);  // (2-gamma)^2 / 2

// Structure exponent for negative moments.
double xi_tilde(double gamma, double q);

// Monte Carlo estimate of E[M(B(center,r))^{-q}] over an ensemble of
// realizations, one estimate per radius, with a companion slope fit of
// log E vs log(1/r). Needs >= 200 replicates.
report::EstimateReport negative_moment(const std::vector<LiouvilleGrid>& ensemble,
                                       double q, Vec2 center,
                                       const std::vector<double>& radii);

// Fraction of (point, radius) pairs violating the doubling inequality
// M(B(x,2r)) <= 8 (log 1/r)^kappa M(B(x,r)); kappa must exceed 2.
report::EstimateReport doubling_check(const LiouvilleGrid& m,
                                      const std::vector<Vec2>& points,
                                      const std::vector<double>& radii,
                                      double kappa);

}  // namespace lqg

#endif
