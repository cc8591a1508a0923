#ifndef LQG_WALKER_HPP
#define LQG_WALKER_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/grid.hpp"
#include "lqg/measure.hpp"
#include "lqg/report.hpp"

namespace lqg {

// Planar Brownian motion with generator (1/2) Laplacian: per-coordinate
// increment variance dt.
struct BrownianPath {
  Vec2 start;
  double dt = 0.0;
  std::vector<Vec2> positions;  // positions[i] at time i*dt

  double t_max() const { return dt * double(positions.size() - 1); }
  Vec2 at(double t) const;  // linear interpolation between samples
};

BrownianPath simulate_bm(Vec2 x0, double dt, double t_max, std::uint64_t seed,
                         std::uint64_t walker_id);

// The additive functional F^N along a path, by trapezoidal quadrature of
// exp(gamma X_N - gamma^2/2 v_N); strictly increasing with F_0 = 0.
struct LiouvilleClock {
  double dt = 0.0;
  double gamma = 0.0;
  int depth = 0;  // band count entering the integrand
  std::vector<double> values;

  double final_value() const { return values.back(); }
};

// depth < 0 means the full stack; otherwise a band prefix (requires
// retained bands).
LiouvilleClock clock_along(const BrownianPath& path, const FieldStack& stack,
                           double gamma, int depth = -1);

// Piecewise-linear monotone inversion: Euclidean time with F(t) = s.
double invert_clock(const LiouvilleClock& clock, double s);

// Liouville Brownian motion at Liouville time s: B at F^{-1}(s).
Vec2 lbm_at(const BrownianPath& path, const LiouvilleClock& clock, double s);

// Cauchy decrements sup_t |F^{n_k} - F^{n_{k+1}}| for consecutive depths.
report::EstimateReport clock_convergence(const BrownianPath& path,
                                         const FieldStack& stack, double gamma,
                                         const std::vector<int>& depths);

struct ExitObservation {
  double euclid_time = 0.0;     // T, Euclidean exit time
  double liouville_time = 0.0;  // tau = F_T
  Vec2 exit_position;
  bool censored = false;
  bool bridge_corrected = false;  // exit detected by the bridge test
};

// First exit of LBM from B(center, r) started at center, with per-step
// Brownian-bridge crossing correction. Censors at t_max_factor * r^2 of
// Euclidean time.
ExitObservation exit_ball(Vec2 center, double r, const FieldStack& stack,
                          double gamma, double dt, std::uint64_t seed,
                          std::uint64_t walker_id, double t_max_factor = 50.0);

// E[tau^-q] against radius: one entry of samples per radius, censored
// observations excluded with the count reported; slope of log E vs log(1/r).
report::EstimateReport exit_negative_moment(
    const std::vector<std::pair<double, std::vector<ExitObservation>>>& samples,
    double q);

// Tail profile of the exit time: linear fit of -log P[tau <= t] against
// (r^beta / t)^(1/(beta-1)) over the deep tail. If ball masses of B(x,r/2)
// and B(x,3r) are supplied, also evaluates the survival lower-bound shape at
// t = mean(tau)/2.
report::EstimateReport exit_tail(const std::vector<ExitObservation>& samples,
                                 double r, double beta, double mass_half = 0.0,
                                 double mass_3r = 0.0);

// Green kernel of (1/2) Laplacian killed outside the disc B(center, R).
double green_disc(double R, Vec2 x, Vec2 y, Vec2 center = {0.0, 0.0});

// E_x[tau_U] two ways: Monte Carlo over exits vs grid quadrature of
// g_U(x, .) against the measure. Reports both sides and their relative
// difference.
report::EstimateReport green_identity_check(const LiouvilleGrid& measure,
                                            const FieldStack& stack, Vec2 x,
                                            Vec2 disc_center, double disc_r,
                                            int walkers, double dt,
                                            std::uint64_t seed);

// Grid quadrature of the Revuz identity: E_x[F_t] = Int_0^t Int q_s(x,y)
// M(dy) ds, using the closed-form time integral of the Gaussian kernel.
double revuz_clock_mean(const LiouvilleGrid& measure, Vec2 x, double t);

}  // namespace lqg

#endif
