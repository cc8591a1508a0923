#include "lqg/stats.hpp"

#include <gsl/gsl_sf_gamma.h>

#include <algorithm>

#include "lqg/parallel.hpp"

namespace lqg::stats {

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  KahanSum s;
  for (double x : xs) s.add(x);
  m.mean = s.value() / double(m.n);
  if (m.n > 1) {
    KahanSum sq;
    for (double x : xs) sq.add((x - m.mean) * (x - m.mean));
    m.variance = sq.value() / double(m.n - 1);
    m.stderr_mean = std::sqrt(m.variance / double(m.n));
  }
  return m;
}

OlsFit ols(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("ols: need >= 2 matched points");
  OlsFit f;
  f.n = xs.size();
  const double n = double(f.n);
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) throw std::invalid_argument("ols: degenerate abscissae");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ssr += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  if (f.n > 2) f.slope_se = std::sqrt(ssr / (double(f.n - 2) * sxx));
  return f;
}

double ks_uniform_pvalue(std::vector<double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) throw std::invalid_argument("ks: empty sample");
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = double(i) / double(n);
    const double hi = double(i + 1) / double(n);
    d = std::max(d, std::max(std::abs(xs[i] - lo), std::abs(xs[i] - hi)));
  }
  const double lambda = (std::sqrt(double(n)) + 0.12 + 0.11 / std::sqrt(double(n))) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                        std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double chi2_sf(double x, int k) {
  if (x <= 0) return 1.0;
  return gsl_sf_gamma_inc_Q(0.5 * k, 0.5 * x);
}

double chi2_statistic(std::span<const double> observed,
                      std::span<const double> expected) {
  if (observed.size() != expected.size())
    throw std::invalid_argument("chi2: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0) throw std::invalid_argument("chi2: expected <= 0");
    const double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

}  // namespace lqg::stats
