#include "lqg/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "lqg/quadrature.hpp"

namespace lqg {

void KernelParams::validate() const {
  if (mass <= 0) throw std::invalid_argument("KernelParams: mass must be > 0");
  if (gamma < 0 || gamma >= 2)
    throw std::invalid_argument("KernelParams: gamma must be in [0,2)");
  if (cutoffs.empty() || cutoffs.front() != 1.0)
    throw std::invalid_argument("KernelParams: cutoffs must start at a_0 = 1");
  for (std::size_t i = 1; i < cutoffs.size(); ++i)
    if (cutoffs[i] <= cutoffs[i - 1])
      throw std::invalid_argument("KernelParams: cutoffs must be increasing");
}

KernelParams make_params(double mass, double gamma, int bands, double base) {
  KernelParams p;
  p.mass = mass;
  p.gamma = gamma;
  p.cutoffs.resize(bands + 1);
  double a = 1.0;
  for (int n = 0; n <= bands; ++n, a *= base) p.cutoffs[n] = a;
  p.validate();
  return p;
}

int bands_for_spacing(double dx, double base) {
  if (dx <= 0) throw std::invalid_argument("bands_for_spacing: dx <= 0");
  int n = 0;
  double a = 1.0;
  while (1.0 / a >= dx / 2.0) {
    a *= base;
    ++n;
    if (n > 64) throw std::runtime_error("bands_for_spacing: runaway band count");
  }
  return n;
}

double kernel_k(double mass, double d, double abstol) {
  if (d < 0) throw std::invalid_argument("kernel_k: d < 0");
  if (d == 0.0) return 1.0;  // (1/2) Int exp(-v/2) dv
  const double md = mass * d;
  if (md > 700.0) return 0.0;
  const auto f = [&](double v) {
    return 0.5 * std::exp(-0.5 * md * md / v - 0.5 * v);
  };
  // Split at v = m*d where the two decay regimes meet.
  return quad::integrate(f, 0.0, md, 0.5 * abstol) +
         quad::integrate_to_inf(f, md, 0.5 * abstol);
}

double green_massive(double mass, double r, GreenForm form, double abstol) {
  if (r <= 0)
    throw std::domain_error("green_massive: log singularity at r = 0");
  switch (form) {
    case GreenForm::kHeatParam: {
      const auto f = [&](double u) {
        return 0.5 / u * std::exp(-0.5 * mass * mass * u - 0.5 * r * r / u);
      };
      const double split = r / mass;
      return quad::integrate(f, 0.0, split, 0.5 * abstol) +
             quad::integrate_to_inf(f, split, 0.5 * abstol);
    }
    case GreenForm::kBandIntegral: {
      // Int_1^inf k(u r)/u du = Int_r^inf k(t)/t dt.
      const auto f = [&](double t) { return kernel_k(mass, t, 1e-11) / t; };
      return quad::integrate_to_inf(f, r, abstol);
    }
  }
  throw std::logic_error("green_massive: unknown form");
}

double band_covariance(const KernelParams& p, int n, double r, double abstol) {
  if (n < 1 || n > p.band_count())
    throw std::invalid_argument("band_covariance: band index out of range");
  if (r < 0) throw std::invalid_argument("band_covariance: r < 0");
  const double lo = p.cutoffs[n - 1], hi = p.cutoffs[n];
  const auto f = [&](double u) { return kernel_k(p.mass, u * r, 1e-11) / u; };
  return quad::integrate(f, lo, hi, abstol);
}

double band_covariance_sum(const KernelParams& p, double r, double abstol) {
  if (r < 0) throw std::invalid_argument("band_covariance_sum: r < 0");
  const auto f = [&](double u) { return kernel_k(p.mass, u * r, 1e-11) / u; };
  return quad::integrate(f, 1.0, p.cutoffs.back(), abstol);
}

double band_variance(const KernelParams& p, int n) {
  if (n < 1 || n > p.band_count())
    throw std::invalid_argument("band_variance: band index out of range");
  return std::log(p.cutoffs[n] / p.cutoffs[n - 1]);
}

double total_variance(const KernelParams& p) {
  return std::log(p.cutoffs.back());
}

BandProfile::BandProfile(const KernelParams& p, int band, double r_max,
                         double dr)
    : dr_(dr), r_max_(r_max) {
  if (dr <= 0 || r_max <= 0)
    throw std::invalid_argument("BandProfile: bad table geometry");
  const std::size_t npts = std::size_t(std::ceil(r_max / dr)) + 3;
  table_.resize(npts);
  for (std::size_t i = 0; i < npts; ++i)
    table_[i] = band_covariance(p, band, double(i) * dr, 1e-10);
}

double BandProfile::operator()(double r) const {
  if (r < 0) throw std::invalid_argument("BandProfile: r < 0");
  const double u = r / dr_;
  const std::size_t i = std::size_t(u);
  if (i + 2 >= table_.size()) return 0.0;  // beyond resolved decay range
  const double t = u - double(i);
  // Catmull-Rom through four neighbouring table nodes.
  const double p0 = table_[i == 0 ? 1 : i - 1];  // even extension at r = 0
  const double p1 = table_[i];
  const double p2 = table_[i + 1];
  const double p3 = table_[i + 2];
  return p1 + 0.5 * t * (p2 - p0 +
                         t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                              t * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace lqg
