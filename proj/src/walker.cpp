#include "lqg/walker.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lqg/parallel.hpp"
#include "lqg/rng.hpp"
#include "lqg/stats.hpp"

namespace lqg {

namespace {

// Clock integrand exp(gamma X - gamma^2/2 v); identically 1 for gamma = 0.
struct ClockIntegrand {
  const FieldStack* stack;
  double gamma;
  double shift;
  int depth;  // < 0: full cumulative field

  double operator()(Vec2 p) const {
    if (gamma == 0.0) return 1.0;
    const double x = depth < 0 ? stack->at(p) : stack->at_depth(p, depth);
    return std::exp(gamma * x - shift);
  }
};

ClockIntegrand make_integrand(const FieldStack& stack, double gamma, int depth) {
  double v = stack.variance;
  if (depth >= 0) {
    if (depth > int(stack.bands.size()))
      throw std::invalid_argument("clock: depth exceeds retained bands");
    v = 0.0;
    for (int k = 0; k < depth; ++k) v += stack.bands[k].sigma2;
  }
  return ClockIntegrand{&stack, gamma, 0.5 * gamma * gamma * v, depth};
}

double e1_or_zero(double x) {
  if (x > 700.0) return 0.0;
  gsl_sf_result res;
  const int status = gsl_sf_expint_E1_e(x, &res);
  if (status == GSL_EUNDRFLW) return 0.0;
  if (status != GSL_SUCCESS)
    throw std::runtime_error("expint E1 evaluation failed");
  return res.val;
}

}  // namespace

Vec2 BrownianPath::at(double t) const {
  if (t < 0 || t > t_max() * (1.0 + 1e-12))
    throw std::out_of_range("BrownianPath::at: time outside sampled range");
  const double u = t / dt;
  const std::size_t i =
      std::min(std::size_t(u), positions.size() - 2);
  const double frac = std::clamp(u - double(i), 0.0, 1.0);
  return {positions[i].x + frac * (positions[i + 1].x - positions[i].x),
          positions[i].y + frac * (positions[i + 1].y - positions[i].y)};
}

BrownianPath simulate_bm(Vec2 x0, double dt, double t_max, std::uint64_t seed,
                         std::uint64_t walker_id) {
  if (dt <= 0 || t_max < dt)
    throw std::invalid_argument("simulate_bm: need dt > 0 and t_max >= dt");
  BrownianPath path;
  path.start = x0;
  path.dt = dt;
  const std::size_t steps = std::size_t(std::ceil(t_max / dt));
  path.positions.resize(steps + 1);
  path.positions[0] = x0;
  const rng::Stream stream(seed, rng::kWalkerStep, walker_id);
  const double sd = std::sqrt(dt);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto g = stream.normal2(i);
    path.positions[i + 1] = {path.positions[i].x + sd * g[0],
                             path.positions[i].y + sd * g[1]};
  }
  return path;
}

LiouvilleClock clock_along(const BrownianPath& path, const FieldStack& stack,
                           double gamma, int depth) {
  const auto e = make_integrand(stack, gamma, depth);
  LiouvilleClock clock;
  clock.dt = path.dt;
  clock.gamma = gamma;
  clock.depth = depth < 0 ? stack.params.band_count() : depth;
  clock.values.resize(path.positions.size());
  clock.values[0] = 0.0;
  double prev = e(path.positions[0]);
  KahanSum acc;
  for (std::size_t i = 1; i < path.positions.size(); ++i) {
    const double cur = e(path.positions[i]);
    acc.add(0.5 * path.dt * (prev + cur));
    clock.values[i] = acc.value();
    prev = cur;
  }
  return clock;
}

double invert_clock(const LiouvilleClock& clock, double s) {
  if (s < 0 || s > clock.final_value())
    throw std::out_of_range("invert_clock: s outside clock range");
  const auto it =
      std::lower_bound(clock.values.begin(), clock.values.end(), s);
  std::size_t i = it - clock.values.begin();
  if (i > 0 && (i == clock.values.size() || clock.values[i] != s)) --i;
  if (i + 1 >= clock.values.size()) return clock.dt * double(i);
  const double f0 = clock.values[i], f1 = clock.values[i + 1];
  const double frac = f1 > f0 ? (s - f0) / (f1 - f0) : 0.0;
  return clock.dt * (double(i) + frac);
}

Vec2 lbm_at(const BrownianPath& path, const LiouvilleClock& clock, double s) {
  return path.at(invert_clock(clock, s));
}

report::EstimateReport clock_convergence(const BrownianPath& path,
                                         const FieldStack& stack, double gamma,
                                         const std::vector<int>& depths) {
  for (std::size_t k = 1; k < depths.size(); ++k)
    if (depths[k] <= depths[k - 1])
      throw std::invalid_argument("clock_convergence: depths must increase");
  report::EstimateReport rep;
  rep.quantity = "clock_cauchy_decrements";
  rep.n_samples = depths.size();
  std::vector<LiouvilleClock> clocks;
  for (int d : depths) clocks.push_back(clock_along(path, stack, gamma, d));
  for (std::size_t k = 0; k + 1 < clocks.size(); ++k) {
    double sup = 0.0;
    for (std::size_t i = 0; i < clocks[k].values.size(); ++i)
      sup = std::max(sup,
                     std::abs(clocks[k].values[i] - clocks[k + 1].values[i]));
    rep.aux["dec" + std::to_string(k)] = sup;
    rep.value = sup;
  }
  rep.aux["decrement_count"] = double(depths.size() > 0 ? depths.size() - 1 : 0);
  return rep;
}

ExitObservation exit_ball(Vec2 center, double r, const FieldStack& stack,
                          double gamma, double dt, std::uint64_t seed,
                          std::uint64_t walker_id, double t_max_factor) {
  if (r <= 0 || dt <= 0) throw std::invalid_argument("exit_ball: bad r or dt");
  const auto e = make_integrand(stack, gamma, -1);
  const rng::Stream steps(seed, rng::kWalkerStep, walker_id);
  const rng::Stream bridge(seed, rng::kWalkerBridge, walker_id);
  const double sd = std::sqrt(dt);
  const double t_max = t_max_factor * r * r;
  const std::uint64_t max_steps = std::uint64_t(std::ceil(t_max / dt));

  Vec2 p = center;
  double e_prev = e(p);
  KahanSum clock;
  for (std::uint64_t i = 0; i < max_steps; ++i) {
    const auto g = steps.normal2(i);
    const Vec2 q{p.x + sd * g[0], p.y + sd * g[1]};
    const double dq = (q - center).norm();
    if (dq >= r) {
      // direct crossing: line-circle intersection for the exit fraction
      const Vec2 d = q - p, o = p - center;
      const double a = d.norm2();
      const double b = 2.0 * (o.x * d.x + o.y * d.y);
      const double c = o.norm2() - r * r;
      const double disc = std::max(b * b - 4.0 * a * c, 0.0);
      const double frac =
          std::clamp((-b + std::sqrt(disc)) / (2.0 * a), 0.0, 1.0);
      const Vec2 exit{p.x + frac * d.x, p.y + frac * d.y};
      const double e_exit = e(exit);
      clock.add(0.5 * frac * dt * (e_prev + e_exit));
      return ExitObservation{dt * double(i) + frac * dt, clock.value(), exit,
                             false, false};
    }
    const double d1 = r - (p - center).norm();
    const double d2 = r - dq;
    const double p_cross = std::exp(-2.0 * d1 * d2 / dt);
    if (bridge.uniform(i) < p_cross) {
      // bridge excursion hit the boundary inside the step
      const double frac = d1 + d2 > 0 ? d1 / (d1 + d2) : 0.5;
      const Vec2 mid{p.x + frac * (q.x - p.x), p.y + frac * (q.y - p.y)};
      const Vec2 off = mid - center;
      const double len = off.norm();
      const Vec2 exit =
          len > 0 ? Vec2{center.x + off.x * r / len, center.y + off.y * r / len}
                  : Vec2{center.x + r, center.y};
      const double e_exit = e(exit);
      clock.add(0.5 * frac * dt * (e_prev + e_exit));
      return ExitObservation{dt * double(i) + frac * dt, clock.value(), exit,
                             false, true};
    }
    const double e_cur = e(q);
    clock.add(0.5 * dt * (e_prev + e_cur));
    p = q;
    e_prev = e_cur;
  }
  return ExitObservation{t_max, clock.value(), p, true, false};
}

report::EstimateReport exit_negative_moment(
    const std::vector<std::pair<double, std::vector<ExitObservation>>>& samples,
    double q) {
  if (q < 0) throw std::invalid_argument("exit_negative_moment: q < 0");
  report::EstimateReport rep;
  rep.quantity = "exit_negative_moment_q" + std::to_string(q);
  std::vector<double> log_est, log_inv_r;
  std::uint64_t censored_total = 0, used_total = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& [r, obs] = samples[k];
    std::vector<double> vals;
    vals.reserve(obs.size());
    std::uint64_t censored = 0;
    for (const auto& o : obs) {
      if (o.censored) {
        ++censored;
        continue;
      }
      vals.push_back(std::pow(o.liouville_time, -q));
    }
    if (vals.empty())
      throw std::invalid_argument("exit_negative_moment: no uncensored samples");
    const auto m = stats::moments(vals);
    censored_total += censored;
    used_total += vals.size();
    log_est.push_back(std::log(m.mean));
    log_inv_r.push_back(std::log(1.0 / r));
    const std::string tag = "r" + std::to_string(k);
    rep.aux[tag + "_radius"] = r;
    rep.aux[tag + "_estimate"] = m.mean;
    rep.aux[tag + "_se"] = m.stderr_mean;
    rep.aux[tag + "_censored"] = double(censored);
  }
  rep.n_samples = used_total;
  rep.aux["censored_total"] = double(censored_total);
  if (log_est.size() >= 2) {
    const auto fit = stats::ols(log_inv_r, log_est);
    rep.aux["slope"] = fit.slope;
    rep.aux["slope_se"] = fit.slope_se;
    rep.aux["r2"] = fit.r2;
    rep.value = fit.slope;
  } else {
    rep.value = std::exp(log_est.front());
  }
  rep.set_interval();
  return rep;
}

report::EstimateReport exit_tail(const std::vector<ExitObservation>& samples,
                                 double r, double beta, double mass_half,
                                 double mass_3r) {
  if (beta < 2.0)
    throw std::invalid_argument("exit_tail: beta must be >= 2");
  std::vector<double> taus;
  taus.reserve(samples.size());
  for (const auto& o : samples)
    if (!o.censored) taus.push_back(o.liouville_time);
  if (taus.size() < 100)
    throw std::invalid_argument("exit_tail: need >= 100 uncensored samples");
  std::sort(taus.begin(), taus.end());
  const std::size_t n = taus.size();

  report::EstimateReport rep;
  rep.quantity = "exit_tail_beta" + std::to_string(beta);
  rep.n_samples = n;

  // deep tail: order statistics from rank 30 up to the lowest decade
  const std::size_t k_min = 30;
  const std::size_t k_max = std::max<std::size_t>(k_min + 8, n / 10);
  std::vector<double> xs, ys;
  const double expo = 1.0 / (beta - 1.0);
  const int points = 8;
  for (int j = 0; j < points; ++j) {
    const double lk = std::log(double(k_min)) +
                      (std::log(double(k_max)) - std::log(double(k_min))) *
                          double(j) / double(points - 1);
    const std::size_t k = std::size_t(std::lround(std::exp(lk)));
    if (k < k_min || k > n) continue;
    const double t = taus[k - 1];
    xs.push_back(std::pow(std::pow(r, beta) / t, expo));
    ys.push_back(-std::log(double(k) / double(n)));
  }
  if (xs.size() < 4) throw std::runtime_error("exit_tail: too few tail bins");
  const auto fit = stats::ols(xs, ys);
  rep.value = fit.r2;
  rep.aux["slope"] = fit.slope;
  rep.aux["intercept"] = fit.intercept;
  rep.aux["r2"] = fit.r2;
  rep.aux["n_bins"] = double(xs.size());

  // survival bound shape at t = mean(tau)/2
  KahanSum mean_acc;
  for (double t : taus) mean_acc.add(t);
  const double t_half = 0.5 * mean_acc.value() / double(n);
  const std::size_t below =
      std::lower_bound(taus.begin(), taus.end(), t_half) - taus.begin();
  const double p_early = double(below) / double(n);
  rep.aux["t_half"] = t_half;
  rep.aux["p_tau_below_half_mean"] = p_early;
  rep.aux["survival"] = 1.0 - p_early;
  if (mass_half > 0 && mass_3r > 0 && r < 1.0) {
    const double ratio = mass_half / (mass_3r * std::log(1.0 / r));
    rep.aux["mass_ratio_over_log"] = ratio;
    rep.aux["survival_over_ratio"] = (1.0 - p_early) / ratio;
  }
  return rep;
}

double green_disc(double R, Vec2 x, Vec2 y, Vec2 center) {
  const Vec2 a = x - center, b = y - center;
  if (a.norm() >= R || b.norm() >= R)
    throw std::domain_error("green_disc: point outside the disc");
  const double dxy = (a - b).norm();
  if (dxy == 0.0) throw std::domain_error("green_disc: kernel singular at x = y");
  // |R^2 - x conj(y)| with the plane read as complex numbers
  const double re = R * R - (a.x * b.x + a.y * b.y);
  const double im = -(a.y * b.x - a.x * b.y);
  const double num = std::hypot(re, im);
  return std::log(num / (R * dxy)) / 3.14159265358979323846;
}

namespace {

// Quadrature of f against the clock density e(p) dp, sub-sampling every
// cell so both sides of the identity integrate the same (interpolated)
// field; cell-center masses would carry an O(1) convexity bias at gamma > 0.
template <class E, class F>
double density_quadrature(const Grid& g, E&& dens, Vec2 x, Vec2 disc_center,
                          double disc_r, F&& f) {
  const double h = g.dx();
  KahanSum sum;
  for (std::int64_t j = 0; j < g.n; ++j)
    for (std::int64_t i = 0; i < g.n; ++i) {
      const Vec2 c = g.center(i, j);
      if ((c - disc_center).norm() >= disc_r) continue;
      const int s = (c - x).norm() > 1.5 * h ? 4 : 8;
      KahanSum sub;
      for (int sj = 0; sj < s; ++sj)
        for (int si = 0; si < s; ++si) {
          Vec2 p{c.x + (si - 0.5 * (s - 1)) * h / s,
                 c.y + (sj - 0.5 * (s - 1)) * h / s};
          if ((p - x).norm() < h / 64.0) p.x += h / 32.0;
          if ((p - disc_center).norm() >= disc_r) continue;
          sub.add(dens(p) * f(p));
        }
      sum.add(sub.value() * (h / s) * (h / s));
    }
  return sum.value();
}

}  // namespace

report::EstimateReport green_identity_check(const LiouvilleGrid& measure,
                                            const FieldStack& stack, Vec2 x,
                                            Vec2 disc_center, double disc_r,
                                            int walkers, double dt,
                                            std::uint64_t seed) {
  if ((x - disc_center).norm() >= disc_r)
    throw std::invalid_argument("green_identity_check: x outside the disc");
  // Monte Carlo side: E_x[tau_U]. Walkers exit the disc around disc_center
  // but start at x, so step until |p - disc_center| >= disc_r.
  std::vector<double> taus(walkers);
  std::vector<std::uint8_t> censored(walkers, 0);
  parallel_for(walkers, [&](std::int64_t w) {
    // reuse exit_ball around the disc center by shifting the start:
    // simulate directly here since the start is off-center
    const auto e = [&](Vec2 p) {
      return measure.gamma == 0.0
                 ? 1.0
                 : std::exp(measure.gamma * stack.at(p) -
                            0.5 * measure.gamma * measure.gamma * stack.variance);
    };
    const rng::Stream steps(seed, rng::kWalkerStep, w);
    const rng::Stream bridge(seed, rng::kWalkerBridge, w);
    const double sd = std::sqrt(dt);
    const std::uint64_t max_steps =
        std::uint64_t(std::ceil(100.0 * disc_r * disc_r / dt));
    Vec2 p = x;
    double e_prev = e(p);
    KahanSum clock;
    bool done = false;
    for (std::uint64_t i = 0; i < max_steps && !done; ++i) {
      const auto g = steps.normal2(i);
      const Vec2 q{p.x + sd * g[0], p.y + sd * g[1]};
      const double dq = (q - disc_center).norm();
      double frac = -1.0;
      Vec2 exit;
      if (dq >= disc_r) {
        const Vec2 d = q - p, o = p - disc_center;
        const double a = d.norm2();
        const double b = 2.0 * (o.x * d.x + o.y * d.y);
        const double c = o.norm2() - disc_r * disc_r;
        const double disc = std::max(b * b - 4.0 * a * c, 0.0);
        frac = std::clamp((-b + std::sqrt(disc)) / (2.0 * a), 0.0, 1.0);
        exit = {p.x + frac * d.x, p.y + frac * d.y};
      } else {
        const double d1 = disc_r - (p - disc_center).norm();
        const double d2 = disc_r - dq;
        if (bridge.uniform(i) < std::exp(-2.0 * d1 * d2 / dt)) {
          frac = d1 + d2 > 0 ? d1 / (d1 + d2) : 0.5;
          const Vec2 mid{p.x + frac * (q.x - p.x), p.y + frac * (q.y - p.y)};
          const Vec2 off = mid - disc_center;
          const double len = off.norm();
          exit = len > 0 ? Vec2{disc_center.x + off.x * disc_r / len,
                                disc_center.y + off.y * disc_r / len}
                         : Vec2{disc_center.x + disc_r, disc_center.y};
        }
      }
      if (frac >= 0.0) {
        clock.add(0.5 * frac * dt * (e_prev + e(exit)));
        taus[w] = clock.value();
        done = true;
      } else {
        const double e_cur = e(q);
        clock.add(0.5 * dt * (e_prev + e_cur));
        p = q;
        e_prev = e_cur;
      }
    }
    if (!done) {
      taus[w] = clock.value();
      censored[w] = 1;
    }
  });
  std::vector<double> clean;
  clean.reserve(walkers);
  std::uint64_t n_censored = 0;
  for (int w = 0; w < walkers; ++w) {
    if (censored[w])
      ++n_censored;
    else
      clean.push_back(taus[w]);
  }
  if (clean.empty())
    throw std::runtime_error("green_identity_check: all walkers censored");
  const auto mc = stats::moments(clean);

  const auto density = [&](Vec2 p) {
    return measure.gamma == 0.0
               ? 1.0
               : std::exp(measure.gamma * stack.at(p) -
                          0.5 * measure.gamma * measure.gamma * stack.variance);
  };
  const double quad = density_quadrature(
      measure.grid, density, x, disc_center, disc_r,
      [&](Vec2 y) { return green_disc(disc_r, x, y, disc_center); });

  report::EstimateReport rep;
  rep.quantity = "green_identity";
  rep.value = std::abs(mc.mean - quad) / std::max(std::abs(quad), 1e-300);
  rep.n_samples = clean.size();
  rep.stderr_ = mc.stderr_mean / std::max(std::abs(quad), 1e-300);
  rep.aux["monte_carlo"] = mc.mean;
  rep.aux["monte_carlo_se"] = mc.stderr_mean;
  rep.aux["quadrature"] = quad;
  rep.aux["censored"] = double(n_censored);
  rep.set_interval();
  return rep;
}

double revuz_clock_mean(const LiouvilleGrid& measure, Vec2 x, double t) {
  // Int_0^t q_s(x,y) ds = E1(|x-y|^2 / (2t)) / (2 pi)
  const Grid& g = measure.grid;
  const double h = g.dx();
  KahanSum sum;
  for (std::int64_t j = 0; j < g.n; ++j)
    for (std::int64_t i = 0; i < g.n; ++i) {
      const Vec2 c = g.center(i, j);
      const double mass = measure.mass[g.index(i, j)];
      const auto f = [&](Vec2 y) {
        return e1_or_zero((y - x).norm2() / (2.0 * t));
      };
      if ((c - x).norm() > 1.5 * h) {
        sum.add(mass * f(c));
      } else {
        // sub-sample near the integrable singularity at x
        KahanSum sub;
        for (int sj = 0; sj < 8; ++sj)
          for (int si = 0; si < 8; ++si) {
            Vec2 p{c.x + (si - 3.5) * h / 8.0, c.y + (sj - 3.5) * h / 8.0};
            if ((p - x).norm() < h / 64.0) p.x += h / 32.0;
            sub.add(f(p));
          }
        sum.add(mass * sub.value() / 64.0);
      }
    }
  return sum.value() / (2.0 * 3.14159265358979323846);
}

}  // namespace lqg
