#ifndef LQG_HEATKERNEL_HPP
#define LQG_HEATKERNEL_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/grid.hpp"
#include "lqg/measure.hpp"
#include "lqg/report.hpp"
#include "lqg/walker.hpp"

namespace lqg {

// On-diagonal density estimate by ball counting: the fraction of walkers
// found in B(x, rho) at Liouville time t, divided by M(B(x, rho)).
struct ReturnEstimate {
  Vec2 x;
  double t = 0.0;
  double rho = 0.0;
  double p_hat = 0.0;
  double se = 0.0;
  std::uint64_t walkers = 0;
  std::uint64_t hits = 0;
  std::uint64_t killed_count = 0;  // walkers absorbed before time t
  bool killed = false;             // a mask was active
};

struct DimensionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t n_points = 0;
  std::size_t dropped = 0;  // t values rejected for SE/value > 0.3
};

struct OndiagOptions {
  double dt = 0.0;  // <= 0: rho^2 / 400
  std::uint64_t seed = 1;
  double t_max_factor = 2000.0;  // Euclidean-time cap, in units of t
  std::function<bool(Vec2)> mask;  // empty: free (grid-bounded) process
};

// Walkers start at x and run until the Liouville clock reaches t; paths
// extend themselves as needed. Leaving the grid always absorbs.
ReturnEstimate estimate_ondiag(const LiouvilleGrid& measure,
                               const FieldStack& stack, Vec2 x, double t,
                               double rho, std::uint64_t walkers,
                               const OndiagOptions& opts);

// P[tau_{B(x,r)} > t]^2 / M(B(x,r)) as a lower bound for p^{B(x,r)}_{2t}(x,x).
// aux: survival, survival_se, mass, regime_ok (t vs mean tau / 2).
report::EstimateReport dirichlet_lower_bound(
    const LiouvilleGrid& measure, Vec2 x, double r, double t,
    const std::vector<ExitObservation>& exits);

// Smallest rho in [2 dx, r_cap] with M(B(x, rho)) ~= target, by bisection;
// clamps at the bracket ends.
double rho_for_mass(const LiouvilleGrid& measure, Vec2 x, double target,
                    double r_cap);

// OLS of 2 log p_hat(t) against -log t over a mass-matched t grid.
DimensionFit pointwise_dimension(const LiouvilleGrid& measure,
                                 const FieldStack& stack, Vec2 x,
                                 const std::vector<double>& t_grid,
                                 std::uint64_t walkers,
                                 const OndiagOptions& opts);

// Envelope constants across a t-decade: smallest C1 with
// p_hat <= C1 t^-1 log(1/t) and largest C3 with p_hat >= C3 t^-1 log(1/t)^-19.
report::EstimateReport envelope_check(const std::vector<ReturnEstimate>& est);

}  // namespace lqg

#endif
