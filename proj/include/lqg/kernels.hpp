#ifndef LQG_KERNELS_HPP
#define LQG_KERNELS_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lqg {

// Mass, intermittency parameter and band cutoffs of the field construction.
// cutoffs holds a_0..a_N with a_0 = 1, strictly increasing.
struct KernelParams {
  double mass = 1.0;
  double gamma = 1.0;
  std::vector<double> cutoffs = {1.0};

  int band_count() const { return int(cutoffs.size()) - 1; }
  void validate() const;
};

// Dyadic cutoffs a_n = base^n, the default band policy.
KernelParams make_params(double mass, double gamma, int bands,
                         double base = 2.0);

// Smallest N such that 1/a_N < dx/2 for cutoffs a_n = base^n; all finer
// bands would oscillate below grid resolution.
int bands_for_spacing(double dx, double base = 2.0);

// k(z) = (1/2) Int_0^inf exp(-m^2 z^2 / (2v) - v/2) dv at |z| = d.
// Equals 1 at d = 0 and decays exponentially.
double kernel_k(double mass, double d, double abstol = 1e-10);

enum class GreenForm { kHeatParam, kBandIntegral };

// Massive Green function g(r) of m^2 - Delta, by either integral form.
// Diverges logarithmically as r -> 0.
double green_massive(double mass, double r,
                     GreenForm form = GreenForm::kHeatParam,
                     double abstol = 1e-10);

// Band covariance g_n(r) = Int_{a_{n-1}}^{a_n} k(u r) / u du, n in 1..N.
double band_covariance(const KernelParams& p, int n, double r,
                       double abstol = 1e-10);

// Partial Green function Int_1^{a_N} k(u r)/u du; the telescoped sum of the
// band covariances.
double band_covariance_sum(const KernelParams& p, double r,
                           double abstol = 1e-10);

// Band variance g_n(0) = log(a_n / a_{n-1}), exact.
double band_variance(const KernelParams& p, int n);

// Total variance log a_N of the cumulative field.
double total_variance(const KernelParams& p);

// Cached radial profile of one band covariance, used by the field sampler;
// cubic-interpolates a dense table of quadrature values.
class BandProfile {
 public:
  BandProfile(const KernelParams& p, int band, double r_max, double dr);
  double operator()(double r) const;
  double r_max() const { return r_max_; }

 private:
  double dr_, r_max_;
  std::vector<double> table_;
};

}  // namespace lqg

#endif
