#include "lqg/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lqg/parallel.hpp"
#include "lqg/rng.hpp"
#include "lqg/stats.hpp"

namespace lqg {

namespace {

bool in_grid(const Grid& g, Vec2 p) {
  return p.x > g.origin.x && p.x < g.origin.x + g.side && p.y > g.origin.y &&
         p.y < g.origin.y + g.side;
}

}  // namespace

ReturnEstimate estimate_ondiag(const LiouvilleGrid& measure,
                               const FieldStack& stack, Vec2 x, double t,
                               double rho, std::uint64_t walkers,
                               const OndiagOptions& opts) {
  const Grid& g = measure.grid;
  if (rho < 2.0 * g.dx())
    throw std::invalid_argument("estimate_ondiag: rho below 2 dx");
  if (t <= 0) throw std::invalid_argument("estimate_ondiag: t <= 0");
  if (opts.mask && !opts.mask(x))
    throw std::invalid_argument("estimate_ondiag: x outside the mask");
  const double gamma = measure.gamma;
  const double shift = 0.5 * gamma * gamma * stack.variance;
  const double dt = opts.dt > 0 ? opts.dt : rho * rho / 400.0;
  const double sd = std::sqrt(dt);
  const std::uint64_t max_steps =
      std::uint64_t(std::ceil(opts.t_max_factor * t / dt));

  std::vector<std::uint8_t> hit(walkers, 0), dead(walkers, 0);
  parallel_for(walkers, [&](std::int64_t w) {
    const rng::Stream steps(opts.seed, rng::kWalkerStep, w);
    Vec2 p = x;
    double e_prev = gamma == 0.0 ? 1.0 : std::exp(gamma * stack.at(p) - shift);
    KahanSum clock;
    for (std::uint64_t i = 0; i < max_steps; ++i) {
      const auto n2 = steps.normal2(i);
      const Vec2 q{p.x + sd * n2[0], p.y + sd * n2[1]};
      if (!in_grid(g, q) || (opts.mask && !opts.mask(q))) {
        dead[w] = 1;
        return;
      }
      const double e_cur =
          gamma == 0.0 ? 1.0 : std::exp(gamma * stack.at(q) - shift);
      const double prev_clock = clock.value();
      clock.add(0.5 * dt * (e_prev + e_cur));
      if (clock.value() >= t) {
        const double df = clock.value() - prev_clock;
        const double frac = df > 0 ? (t - prev_clock) / df : 0.5;
        const Vec2 pos{p.x + frac * (q.x - p.x), p.y + frac * (q.y - p.y)};
        hit[w] = (pos - x).norm() <= rho;
        return;
      }
      p = q;
      e_prev = e_cur;
    }
    dead[w] = 1;  // Euclidean cap reached without the clock hitting t
  });

  ReturnEstimate est;
  est.x = x;
  est.t = t;
  est.rho = rho;
  est.walkers = walkers;
  est.killed = bool(opts.mask);
  for (std::uint64_t w = 0; w < walkers; ++w) {
    est.hits += hit[w];
    est.killed_count += dead[w];
  }
  const double mass = ball_mass(measure, x, rho);
  const double frac = double(est.hits) / double(walkers);
  est.p_hat = frac / mass;
  est.se = std::sqrt(frac * (1.0 - frac) / double(walkers)) / mass;
  return est;
}

report::EstimateReport dirichlet_lower_bound(
    const LiouvilleGrid& measure, Vec2 x, double r, double t,
    const std::vector<ExitObservation>& exits) {
  if (exits.empty())
    throw std::invalid_argument("dirichlet_lower_bound: no exit samples");
  std::uint64_t survived = 0, n = 0;
  KahanSum tau_sum;
  for (const auto& o : exits) {
    if (o.censored) continue;
    ++n;
    tau_sum.add(o.liouville_time);
    survived += o.liouville_time > t;
  }
  if (n == 0)
    throw std::invalid_argument("dirichlet_lower_bound: all samples censored");
  const double p = double(survived) / double(n);
  const double p_se = std::sqrt(p * (1.0 - p) / double(n));
  const double mass = ball_mass(measure, x, r);

  report::EstimateReport rep;
  rep.quantity = "dirichlet_lower_bound";
  rep.n_samples = n;
  rep.value = p * p / mass;
  rep.stderr_ = 2.0 * p * p_se / mass;
  rep.aux["survival"] = p;
  rep.aux["survival_se"] = p_se;
  rep.aux["mass"] = mass;
  rep.aux["t"] = t;
  const double mean_tau = tau_sum.value() / double(n);
  rep.aux["mean_tau"] = mean_tau;
  rep.aux["regime_ok"] = t <= 0.5 * mean_tau ? 1.0 : 0.0;
  if (t > 0.5 * mean_tau) rep.note = "t above tailtau2 regime (t > mean_tau/2)";
  rep.set_interval();
  return rep;
}

double rho_for_mass(const LiouvilleGrid& measure, Vec2 x, double target,
                    double r_cap) {
  const double lo0 = 2.0 * measure.grid.dx();
  if (r_cap < lo0)
    throw std::invalid_argument("rho_for_mass: r_cap below 2 dx");
  if (ball_mass(measure, x, lo0) >= target) return lo0;
  if (ball_mass(measure, x, r_cap) <= target) return r_cap;
  double lo = lo0, hi = r_cap;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ball_mass(measure, x, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DimensionFit pointwise_dimension(const LiouvilleGrid& measure,
                                 const FieldStack& stack, Vec2 x,
                                 const std::vector<double>& t_grid,
                                 std::uint64_t walkers,
                                 const OndiagOptions& opts) {
  if (t_grid.size() < 5)
    throw std::invalid_argument("pointwise_dimension: need >= 5 t values");
  const double span = *std::max_element(t_grid.begin(), t_grid.end()) /
                      *std::min_element(t_grid.begin(), t_grid.end());
  if (span < 10.0)
    throw std::invalid_argument("pointwise_dimension: t grid under a decade");
  const Grid& g = measure.grid;
  const double r_cap =
      0.25 * std::min({x.x - g.origin.x, g.origin.x + g.side - x.x,
                       x.y - g.origin.y, g.origin.y + g.side - x.y});
  std::vector<double> xs, ys;
  std::size_t dropped = 0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    const double rho = rho_for_mass(measure, x, t, r_cap);
    OndiagOptions o = opts;
    o.seed = opts.seed + k;  // independent walker ensembles per t
    const auto est = estimate_ondiag(measure, stack, x, t, rho, walkers, o);
    if (est.p_hat <= 0 || est.se / est.p_hat > 0.3) {
      ++dropped;
      continue;
    }
    xs.push_back(-std::log(t));
    ys.push_back(2.0 * std::log(est.p_hat));
  }
  if (xs.size() < 5)
    throw std::runtime_error("pointwise_dimension: fewer than 5 valid points");
  const auto fit = stats::ols(xs, ys);
  DimensionFit out;
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.r2 = fit.r2;
  out.t_min = *std::min_element(t_grid.begin(), t_grid.end());
  out.t_max = *std::max_element(t_grid.begin(), t_grid.end());
  out.n_points = xs.size();
  out.dropped = dropped;
  return out;
}

report::EstimateReport envelope_check(const std::vector<ReturnEstimate>& est) {
  if (est.empty()) throw std::invalid_argument("envelope_check: empty input");
  double c1 = 0.0;
  double c3 = std::numeric_limits<double>::infinity();
  bool valid = true;
  for (const auto& e : est) {
    if (e.t <= 0 || e.t >= 1.0 || e.p_hat <= 0) {
      valid = false;
      continue;
    }
    const double lg = std::log(1.0 / e.t);
    c1 = std::max(c1, e.p_hat * e.t / lg);
    c3 = std::min(c3, e.p_hat * e.t * std::pow(lg, 19.0));
  }
  if (c1 <= 0 || !std::isfinite(c3)) valid = false;

  report::EstimateReport rep;
  rep.quantity = "heatkernel_envelopes";
  rep.n_samples = est.size();
  rep.aux["C1"] = c1;
  rep.aux["C3"] = std::isfinite(c3) ? c3 : 0.0;
  rep.aux["eta"] = 19.0;
  rep.aux["valid"] = valid ? 1.0 : 0.0;
  rep.value = valid ? 1.0 : 0.0;
  if (!valid) rep.note = "no finite positive envelope constants on this range";
  return rep;
}

}  // namespace lqg
