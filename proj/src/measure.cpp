#include "lqg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lqg/parallel.hpp"
#include "lqg/rng.hpp"
#include "lqg/stats.hpp"

namespace lqg {

namespace {

LiouvilleGrid build_measure_impl(const FieldStack& stack, double gamma,
                                 bool parallel) {
  if (gamma < 0 || gamma >= 2)
    throw std::invalid_argument(
        "build_measure: gamma must be in [0,2), the measure is trivial beyond");
  LiouvilleGrid m;
  m.grid = stack.grid;
  m.gamma = gamma;
  m.band_count = stack.params.band_count();
  m.variance = stack.variance;
  const double dx2 = m.grid.dx() * m.grid.dx();
  const double shift = 0.5 * gamma * gamma * stack.variance;
  m.mass.resize(stack.cumulative.size());
  const auto cell = [&](std::int64_t c) {
    m.mass[c] = gamma == 0.0
                    ? dx2
                    : std::exp(gamma * stack.cumulative[c] - shift) * dx2;
  };
  if (parallel)
    parallel_for(std::int64_t(m.mass.size()), cell);
  else
    serial_for(std::int64_t(m.mass.size()), cell);
  KahanSum total;
  for (double v : m.mass) {
    if (!std::isfinite(v) || v <= 0)
      throw std::runtime_error("build_measure: non-finite or vanishing mass");
    total.add(v);
  }
  m.total = total.value();
  return m;
}

}  // namespace

LiouvilleGrid build_measure(const FieldStack& stack, double gamma) {
  return build_measure_impl(stack, gamma, true);
}

LiouvilleGrid build_measure_reference(const FieldStack& stack, double gamma) {
  return build_measure_impl(stack, gamma, false);
}

double ball_mass(const LiouvilleGrid& m, Vec2 x, double r) {
  const Grid& g = m.grid;
  const double h = g.dx();
  if (r < 2.0 * h)
    throw std::invalid_argument("ball_mass: r below resolution floor 2 dx");
  if (x.x - r < g.origin.x || x.x + r > g.origin.x + g.side ||
      x.y - r < g.origin.y || x.y + r > g.origin.y + g.side)
    throw std::domain_error("ball_mass: ball not contained in grid");

  const double half_diag = 0.70711 * h;
  std::int64_t i_lo, j_lo, i_hi, j_hi;
  g.locate({x.x - r, x.y - r}, i_lo, j_lo);
  g.locate({x.x + r, x.y + r}, i_hi, j_hi);
  KahanSum sum;
  for (std::int64_t j = j_lo; j <= j_hi; ++j) {
    for (std::int64_t i = i_lo; i <= i_hi; ++i) {
      const Vec2 c = g.center(i, j);
      const double d = (c - x).norm();
      if (d <= r - half_diag) {
        sum.add(m.mass[g.index(i, j)]);
      } else if (d < r + half_diag) {
        // boundary cell: 4x4 sub-sampled area fraction
        int inside = 0;
        for (int sj = 0; sj < 4; ++sj)
          for (int si = 0; si < 4; ++si) {
            const Vec2 p{c.x + (si - 1.5) * h / 4.0, c.y + (sj - 1.5) * h / 4.0};
            inside += (p - x).norm2() <= r * r;
          }
        if (inside > 0)
          sum.add(m.mass[g.index(i, j)] * double(inside) / 16.0);
      }
    }
  }
  return sum.value();
}

MeasureSampler::MeasureSampler(const LiouvilleGrid& m) : m_(&m) {
  if (m.total <= 0)
    throw std::invalid_argument("MeasureSampler: total mass must be positive");
  cumulative_.resize(m.mass.size());
  KahanSum run;
  for (std::size_t c = 0; c < m.mass.size(); ++c) {
    run.add(m.mass[c]);
    cumulative_[c] = run.value();
  }
}

std::int64_t MeasureSampler::draw_cell(std::uint64_t seed,
                                       std::uint64_t index) const {
  const rng::Stream s(seed, rng::kMeasureDraw, index);
  const double u = s.uniform(0) * cumulative_.back();
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::int64_t>(it - cumulative_.begin(),
                                std::int64_t(cumulative_.size()) - 1);
}

Vec2 MeasureSampler::draw(std::uint64_t seed, std::uint64_t index) const {
  const std::int64_t c = draw_cell(seed, index);
  const Grid& g = m_->grid;
  const Vec2 center = g.center(c % g.n, c / g.n);
  const rng::Stream s(seed, rng::kJitter, index);
  const double h = g.dx();
  return {center.x + (s.uniform(0) - 0.5) * h, center.y + (s.uniform(1) - 0.5) * h};
}

ExponentFit volume_exponent_fit(const LiouvilleGrid& m, Vec2 x,
                                const std::vector<double>& radii) {
  if (radii.size() < 4)
    throw std::invalid_argument("volume_exponent_fit: need >= 4 radii");
  std::vector<double> lx(radii.size()), ly(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    lx[k] = std::log(radii[k]);
    ly[k] = std::log(ball_mass(m, x, radii[k]));
  }
  const auto f = stats::ols(lx, ly);
  return ExponentFit{f.slope, f.intercept, f.r2, f.slope_se,
                     *std::min_element(radii.begin(), radii.end()),
                     *std::max_element(radii.begin(), radii.end())};
}

double volume_alpha1(double gamma) { return 0.5 * (gamma + 2.0) * (gamma + 2.0); }
double volume_alpha2(double gamma) { return 0.5 * (2.0 - gamma) * (2.0 - gamma); }

double xi_tilde(double gamma, double q) {
  return (2.0 + 0.5 * gamma * gamma) * q + 0.5 * gamma * gamma * q * q;
}

report::EstimateReport negative_moment(const std::vector<LiouvilleGrid>& ensemble,
                                       double q, Vec2 center,
                                       const std::vector<double>& radii) {
  if (ensemble.size() < 200)
    throw std::invalid_argument("negative_moment: need >= 200 replicates");
  if (q < 0) throw std::invalid_argument("negative_moment: q must be >= 0");
  report::EstimateReport rep;
  rep.quantity = "negative_moment_q" + std::to_string(q);
  rep.n_samples = ensemble.size();
  std::vector<double> log_est(radii.size()), log_inv_r(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    std::vector<double> vals(ensemble.size());
    for (std::size_t r = 0; r < ensemble.size(); ++r)
      vals[r] = std::pow(ball_mass(ensemble[r], center, radii[k]), -q);
    const auto mo = stats::moments(vals);
    log_est[k] = std::log(mo.mean);
    log_inv_r[k] = std::log(1.0 / radii[k]);
    const std::string tag = "r" + std::to_string(k);
    rep.aux[tag + "_radius"] = radii[k];
    rep.aux[tag + "_estimate"] = mo.mean;
    rep.aux[tag + "_se"] = mo.stderr_mean;
  }
  rep.value = std::exp(log_est.back());
  if (radii.size() >= 2) {
    const auto fit = stats::ols(log_inv_r, log_est);
    rep.aux["slope"] = fit.slope;
    rep.aux["slope_se"] = fit.slope_se;
    rep.aux["r2"] = fit.r2;
  }
  rep.set_interval();
  return rep;
}

report::EstimateReport doubling_check(const LiouvilleGrid& m,
                                      const std::vector<Vec2>& points,
                                      const std::vector<double>& radii,
                                      double kappa) {
  if (kappa <= 2.0)
    throw std::invalid_argument("doubling_check: kappa must exceed 2");
  std::int64_t violations = 0, tested = 0;
  for (const Vec2& x : points) {
    for (double r : radii) {
      if (r >= 1.0)
        throw std::invalid_argument("doubling_check: radii must be < 1");
      double m1, m2;
      try {
        m1 = ball_mass(m, x, r);
        m2 = ball_mass(m, x, 2.0 * r);
      } catch (const std::domain_error&) {
        continue;  // ball sticks out of the grid; skip the pair
      }
      ++tested;
      const double bound = 8.0 * std::pow(std::log(1.0 / r), kappa) * m1;
      if (m2 > bound) ++violations;
    }
  }
  if (tested == 0)
    throw std::invalid_argument("doubling_check: no testable (point, radius) pair");
  report::EstimateReport rep;
  rep.quantity = "doubling_violation_fraction";
  rep.value = double(violations) / double(tested);
  rep.n_samples = tested;
  rep.aux["kappa"] = kappa;
  rep.aux["violations"] = double(violations);
  rep.set_interval();
  return rep;
}

}  // namespace lqg
