#ifndef LQG_STATS_HPP
#define LQG_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace lqg::stats {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double stderr_mean = 0.0;
};

// Two-pass moments over a fixed sample vector (order-independent input).
Moments moments(std::span<const double> xs);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
};

OlsFit ols(std::span<const double> xs, std::span<const double> ys);

// Kolmogorov-Smirnov test of xs against U(0,1); returns the asymptotic
// p-value of sqrt(n)*D.
double ks_uniform_pvalue(std::vector<double> xs);

// Chi-square upper tail P[X >= x] with k degrees of freedom.
double chi2_sf(double x, int k);

// Pearson chi-square statistic of observed counts against expected counts.
double chi2_statistic(std::span<const double> observed,
                      std::span<const double> expected);

}  // namespace lqg::stats

#endif
