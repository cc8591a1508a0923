#ifndef LQG_FIELD_HPP
#define LQG_FIELD_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "lqg/grid.hpp"
#include "lqg/kernels.hpp"
#include "lqg/report.hpp"

namespace lqg {

// One band field Y_n sampled at the cell centers.
struct BandField {
  int band = 0;
  Grid grid;
  std::vector<double> values;  // row-major, one per cell
  double sigma2 = 0.0;         // nominal variance log(a_n / a_{n-1})
};

// Cumulative field X_N with its variance ledger. Bands are retained when
// requested so convergence studies can truncate the sum.
struct FieldStack {
  Grid grid;
  KernelParams params;
  std::vector<double> cumulative;  // X_N per cell
  double variance = 0.0;           // log a_N
  std::vector<BandField> bands;    // empty unless retained

  // Bilinear interpolation of X_N from the four surrounding cell centers.
  double at(Vec2 p) const;

  // Partial sum X_n at p for a band prefix (requires retained bands).
  double at_depth(Vec2 p, int depth) const;
};

double bilinear_at(const Grid& grid, const std::vector<double>& values, Vec2 p);

// Stationary Gaussian sampler for one band, via circulant embedding of the
// band covariance on a periodic extension. Coarse bands, whose correlation
// length exceeds the box, are sampled on a decimated lattice with a padding
// chosen from the covariance decay length and upsampled bilinearly.
class BandSampler {
 public:
  BandSampler(const KernelParams& params, const Grid& grid, int band);
  ~BandSampler();
  BandSampler(const BandSampler&) = delete;
  BandSampler& operator=(const BandSampler&) = delete;

  // Two independent fields per FFT (real and imaginary parts).
  std::array<std::vector<double>, 2> sample_pair(std::uint64_t seed,
                                                 std::uint64_t pair_index) const;

  std::vector<double> sample(std::uint64_t seed, std::uint64_t replicate) const;

  int band() const { return band_; }
  int torus_size() const { return torus_n_; }
  int decimation() const { return 1 << decim_log2_; }
  bool dense_fallback() const { return dense_; }
  // Fraction of embedding spectrum entries clamped to zero.
  double clamped_fraction() const { return clamped_fraction_; }

 private:
  void build_spectrum(const KernelParams& params);
  void build_dense(const KernelParams& params);
  std::vector<double> upsample(const std::vector<double>& coarse) const;

  Grid grid_;
  int band_ = 0;
  int decim_log2_ = 0;  // coarse spacing = dx * 2^decim_log2
  double delta_ = 0.0;
  int window_ = 0;   // coarse nodes per side covering the grid
  int torus_n_ = 0;  // embedding torus nodes per side
  bool dense_ = false;
  double clamped_fraction_ = 0.0;
  std::vector<double> sqrt_spectrum_;   // circulant route
  std::vector<double> dense_cholesky_;  // lower factor, window_^2 squared
  void* plan_ = nullptr;                // fftw_plan
};

// Samples whole stacks; band samplers are built once and reused across
// replicates (profiles and spectra are the expensive part).
class StackSampler {
 public:
  StackSampler(KernelParams params, Grid grid);

  FieldStack sample(std::uint64_t seed, std::uint64_t replicate,
                    bool keep_bands = true) const;
  std::array<FieldStack, 2> sample_pair(std::uint64_t seed,
                                        std::uint64_t pair_index,
                                        bool keep_bands = false) const;

  const BandSampler& band(int n) const { return *samplers_.at(n - 1); }
  const KernelParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }

 private:
  KernelParams params_;
  Grid grid_;
  std::vector<std::unique_ptr<BandSampler>> samplers_;
};

// Empirical covariance of an ensemble of one band against the quadrature
// oracle at the given lag distances (snapped to whole cells). When shuffled
// is set, products pair each replicate with the next one as an independence
// negative control.
report::EstimateReport validate_covariance(const std::vector<BandField>& ensemble,
                                           const KernelParams& params,
                                           const std::vector<double>& lags,
                                           bool shuffled = false);

}  // namespace lqg

#endif
