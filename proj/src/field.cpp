#include "lqg/field.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "lqg/parallel.hpp"
#include "lqg/rng.hpp"
#include "lqg/stats.hpp"

namespace lqg {

namespace {

std::mutex g_fftw_mutex;  // FFTW planner is not thread-safe

// Smallest 7-smooth integer >= n (FFT-friendly sizes).
int next_fft_size(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

std::uint32_t band_tag(int band) {
  return rng::kBandNoise | (std::uint32_t(band) << 8);
}

constexpr double kDecayLengths = 20.0;  // covariance e-folds absorbed by padding
constexpr double kResolutionFactor = 8.0;  // samples per correlation length
constexpr int kDenseWindowLimit = 80;

}  // namespace

double bilinear_at(const Grid& grid, const std::vector<double>& values, Vec2 p) {
  if (!grid.contains(p))
    throw std::domain_error("bilinear_at: point outside grid");
  const double h = grid.dx();
  const double fx = (p.x - grid.origin.x) / h - 0.5;
  const double fy = (p.y - grid.origin.y) / h - 0.5;
  const auto clampi = [&](double f) {
    return std::clamp(std::int64_t(std::floor(f)), std::int64_t(0),
                      std::int64_t(grid.n) - 2);
  };
  const std::int64_t i0 = grid.n > 1 ? clampi(fx) : 0;
  const std::int64_t j0 = grid.n > 1 ? clampi(fy) : 0;
  if (grid.n == 1) return values[0];
  const double tx = std::clamp(fx - double(i0), 0.0, 1.0);
  const double ty = std::clamp(fy - double(j0), 0.0, 1.0);
  const double v00 = values[grid.index(i0, j0)];
  const double v10 = values[grid.index(i0 + 1, j0)];
  const double v01 = values[grid.index(i0, j0 + 1)];
  const double v11 = values[grid.index(i0 + 1, j0 + 1)];
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 +
         (1 - tx) * ty * v01 + tx * ty * v11;
}

double FieldStack::at(Vec2 p) const { return bilinear_at(grid, cumulative, p); }

double FieldStack::at_depth(Vec2 p, int depth) const {
  if (depth < 0 || depth > int(bands.size()))
    throw std::invalid_argument("FieldStack::at_depth: depth out of range");
  double sum = 0.0;
  for (int k = 0; k < depth; ++k) sum += bilinear_at(grid, bands[k].values, p);
  return sum;
}

BandSampler::BandSampler(const KernelParams& params, const Grid& grid, int band)
    : grid_(grid), band_(band) {
  params.validate();
  if (band < 1 || band > params.band_count())
    throw std::invalid_argument("BandSampler: band index out of range");
  const double dx = grid.dx();
  const double a_hi = params.cutoffs[band];
  // Decimate while the coarse lattice still resolves the band's correlation
  // length; fine (sub-grid) bands sample the cell centers directly.
  const double target = 1.0 / (kResolutionFactor * params.mass * a_hi);
  decim_log2_ = 0;
  while (dx * double(2 << decim_log2_) <= target &&
         (std::int64_t(1) << (decim_log2_ + 1)) < grid.n)
    ++decim_log2_;
  delta_ = dx * double(1 << decim_log2_);
  window_ = int((std::int64_t(grid.n) - 1) >> decim_log2_) + 2;
  build_spectrum(params);
}

BandSampler::~BandSampler() {
  if (plan_) {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

void BandSampler::build_spectrum(const KernelParams& params) {
  const double a_lo = params.cutoffs[band_ - 1];
  double decay = kDecayLengths / (params.mass * a_lo);
  for (int attempt = 0;; ++attempt) {
    const int pad = int(std::ceil(decay / delta_));
    torus_n_ = next_fft_size(std::max(window_ + pad, 2 * pad));
    const double dr = std::min(delta_, 1.0 / (params.mass *
                                              params.cutoffs[band_])) / 4.0;
    const double r_max =
        std::min(0.7072 * torus_n_ * delta_, 1.5 * decay) + 4.0 * dr;
    BandProfile profile(params, band_, r_max, dr);

    const std::int64_t nt = torus_n_;
    const std::int64_t total = nt * nt;
    fftw_complex* buf =
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    if (!buf) throw std::bad_alloc();
    for (std::int64_t j = 0; j < nt; ++j) {
      const double dj = double(std::min(j, nt - j)) * delta_;
      for (std::int64_t i = 0; i < nt; ++i) {
        const double di = double(std::min(i, nt - i)) * delta_;
        buf[j * nt + i][0] = profile(std::hypot(di, dj));
        buf[j * nt + i][1] = 0.0;
      }
    }
    {
      std::lock_guard<std::mutex> lock(g_fftw_mutex);
      fftw_plan p = fftw_plan_dft_2d(int(nt), int(nt), buf, buf, FFTW_FORWARD,
                                     FFTW_ESTIMATE);
      fftw_execute(p);
      fftw_destroy_plan(p);
    }
    double max_lam = 0.0, min_lam = 0.0;
    for (std::int64_t k = 0; k < total; ++k) {
      max_lam = std::max(max_lam, buf[k][0]);
      min_lam = std::min(min_lam, buf[k][0]);
    }
    if (min_lam < -1e-10 * max_lam) {
      fftw_free(buf);
      if (attempt < 2) {  // enlarge padding before giving up on the embedding
        decay *= 1.5;
        continue;
      }
      build_dense(params);
      return;
    }
    std::int64_t clamped = 0;
    sqrt_spectrum_.resize(total);
    for (std::int64_t k = 0; k < total; ++k) {
      double lam = buf[k][0];
      if (lam < 0) {
        lam = 0;
        ++clamped;
      }
      sqrt_spectrum_[k] = std::sqrt(lam / double(total));
    }
    clamped_fraction_ = double(clamped) / double(total);
    fftw_free(buf);
    {
      std::lock_guard<std::mutex> lock(g_fftw_mutex);
      fftw_complex* in = static_cast<fftw_complex*>(
          fftw_malloc(sizeof(fftw_complex) * total));
      plan_ = fftw_plan_dft_2d(int(nt), int(nt), in, in, FFTW_BACKWARD,
                               FFTW_ESTIMATE);
      fftw_free(in);
    }
    return;
  }
}

void BandSampler::build_dense(const KernelParams& params) {
  if (window_ > kDenseWindowLimit)
    throw std::runtime_error(
        "BandSampler: embedding not PSD and window too large for dense "
        "factorization");
  dense_ = true;
  const int w = window_;
  const std::int64_t dim = std::int64_t(w) * w;
  Eigen::MatrixXd cov(dim, dim);
  for (std::int64_t q = 0; q < dim; ++q) {
    const double qx = double(q % w) * delta_, qy = double(q / w) * delta_;
    for (std::int64_t p = q; p < dim; ++p) {
      const double px = double(p % w) * delta_, py = double(p / w) * delta_;
      const double c =
          band_covariance(params, band_, std::hypot(px - qx, py - qy));
      cov(p, q) = c;
      cov(q, p) = c;
    }
    cov(q, q) += 1e-10;  // diagonal jitter
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("BandSampler: dense factorization failed");
  Eigen::MatrixXd L = llt.matrixL();
  dense_cholesky_.assign(L.data(), L.data() + dim * dim);
}

std::vector<double> BandSampler::upsample(const std::vector<double>& coarse) const {
  const std::int64_t n = grid_.n;
  if (decim_log2_ == 0) {
    std::vector<double> out(n * n);
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t i = 0; i < n; ++i)
        out[j * n + i] = coarse[j * window_ + i];
    return out;
  }
  std::vector<double> out(n * n);
  const double inv = 1.0 / double(1 << decim_log2_);
  for (std::int64_t j = 0; j < n; ++j) {
    const double fy = double(j) * inv;
    const std::int64_t cj = std::int64_t(fy);
    const double ty = fy - double(cj);
    for (std::int64_t i = 0; i < n; ++i) {
      const double fx = double(i) * inv;
      const std::int64_t ci = std::int64_t(fx);
      const double tx = fx - double(ci);
      const double v00 = coarse[cj * window_ + ci];
      const double v10 = coarse[cj * window_ + ci + 1];
      const double v01 = coarse[(cj + 1) * window_ + ci];
      const double v11 = coarse[(cj + 1) * window_ + ci + 1];
      out[j * n + i] = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 +
                       (1 - tx) * ty * v01 + tx * ty * v11;
    }
  }
  return out;
}

std::array<std::vector<double>, 2> BandSampler::sample_pair(
    std::uint64_t seed, std::uint64_t pair_index) const {
  const rng::Stream stream(seed, band_tag(band_), pair_index);
  if (dense_) {
    const int w = window_;
    const std::int64_t dim = std::int64_t(w) * w;
    std::vector<double> z0(dim), z1(dim);
    for (std::int64_t k = 0; k < dim; ++k) {
      const auto g = stream.normal2(std::uint64_t(k));
      z0[k] = g[0];
      z1[k] = g[1];
    }
    std::array<std::vector<double>, 2> out;
    for (int which = 0; which < 2; ++which) {
      const std::vector<double>& z = which == 0 ? z0 : z1;
      std::vector<double> coarse(dim, 0.0);
      // lower-triangular multiply
      for (std::int64_t r = 0; r < dim; ++r) {
        double s = 0.0;
        const double* row = dense_cholesky_.data() + r;
        for (std::int64_t c = 0; c <= r; ++c) s += row[c * dim] * z[c];
        coarse[r] = s;
      }
      out[which] = upsample(coarse);
    }
    return out;
  }

  const std::int64_t nt = torus_n_;
  const std::int64_t total = nt * nt;
  fftw_complex* buf =
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
  if (!buf) throw std::bad_alloc();
  for (std::int64_t k = 0; k < total; ++k) {
    const double s = sqrt_spectrum_[k];
    if (s == 0.0) {
      buf[k][0] = 0.0;
      buf[k][1] = 0.0;
    } else {
      const auto g = stream.normal2(std::uint64_t(k));
      buf[k][0] = s * g[0];
      buf[k][1] = s * g[1];
    }
  }
  fftw_execute_dft(static_cast<fftw_plan>(plan_), buf, buf);
  const int w = window_;
  std::vector<double> c0(std::size_t(w) * w), c1(std::size_t(w) * w);
  for (int j = 0; j < w; ++j)
    for (int i = 0; i < w; ++i) {
      c0[std::size_t(j) * w + i] = buf[std::int64_t(j) * nt + i][0];
      c1[std::size_t(j) * w + i] = buf[std::int64_t(j) * nt + i][1];
    }
  fftw_free(buf);
  return {upsample(c0), upsample(c1)};
}

std::vector<double> BandSampler::sample(std::uint64_t seed,
                                        std::uint64_t replicate) const {
  auto pair = sample_pair(seed, replicate / 2);
  return std::move(pair[replicate % 2]);
}

StackSampler::StackSampler(KernelParams params, Grid grid)
    : params_(std::move(params)), grid_(grid) {
  params_.validate();
  for (int n = 1; n <= params_.band_count(); ++n)
    samplers_.push_back(std::make_unique<BandSampler>(params_, grid_, n));
}

FieldStack StackSampler::sample(std::uint64_t seed, std::uint64_t replicate,
                                bool keep_bands) const {
  FieldStack stack;
  stack.grid = grid_;
  stack.params = params_;
  stack.variance = total_variance(params_);
  stack.cumulative.assign(grid_.cell_count(), 0.0);
  for (int n = 1; n <= params_.band_count(); ++n) {
    std::vector<double> vals = samplers_[n - 1]->sample(seed, replicate);
    for (std::int64_t c = 0; c < grid_.cell_count(); ++c)
      stack.cumulative[c] += vals[c];
    if (keep_bands)
      stack.bands.push_back(
          BandField{n, grid_, std::move(vals), band_variance(params_, n)});
  }
  return stack;
}

std::array<FieldStack, 2> StackSampler::sample_pair(std::uint64_t seed,
                                                    std::uint64_t pair_index,
                                                    bool keep_bands) const {
  std::array<FieldStack, 2> out;
  for (auto& stack : out) {
    stack.grid = grid_;
    stack.params = params_;
    stack.variance = total_variance(params_);
    stack.cumulative.assign(grid_.cell_count(), 0.0);
  }
  for (int n = 1; n <= params_.band_count(); ++n) {
    auto pair = samplers_[n - 1]->sample_pair(seed, pair_index);
    for (int which = 0; which < 2; ++which) {
      for (std::int64_t c = 0; c < grid_.cell_count(); ++c)
        out[which].cumulative[c] += pair[which][c];
      if (keep_bands)
        out[which].bands.push_back(BandField{n, grid_, std::move(pair[which]),
                                             band_variance(params_, n)});
    }
  }
  return out;
}

report::EstimateReport validate_covariance(const std::vector<BandField>& ensemble,
                                           const KernelParams& params,
                                           const std::vector<double>& lags,
                                           bool shuffled) {
  if (ensemble.size() < 1000)
    throw std::invalid_argument(
        "validate_covariance: need >= 1000 independent realizations");
  const Grid& grid = ensemble.front().grid;
  const int band = ensemble.front().band;
  const double dx = grid.dx();
  report::EstimateReport rep;
  rep.quantity = shuffled ? "band_covariance_shuffled" : "band_covariance";
  rep.n_samples = ensemble.size();
  double max_abs_z = 0.0;
  int flagged = 0;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const std::int64_t k = std::llround(lags[li] / dx);
    if (k < 0 || k >= grid.n)
      throw std::invalid_argument("validate_covariance: lag outside grid");
    const double lag_r = double(k) * dx;
    const std::size_t n_rep = ensemble.size() - (shuffled ? 1 : 0);
    std::vector<double> per_rep(n_rep);
    for (std::size_t r = 0; r < n_rep; ++r) {
      const std::vector<double>& a = ensemble[r].values;
      const std::vector<double>& b =
          shuffled ? ensemble[r + 1].values : ensemble[r].values;
      KahanSum s;
      std::int64_t count = 0;
      for (std::int64_t j = 0; j < grid.n; ++j)
        for (std::int64_t i = 0; i + k < grid.n; ++i) {
          s.add(a[grid.index(i, j)] * b[grid.index(i + k, j)]);
          ++count;
        }
      per_rep[r] = s.value() / double(count);
    }
    const auto m = stats::moments(per_rep);
    const double target = shuffled ? 0.0 : band_covariance(params, band, lag_r);
    const double z = m.stderr_mean > 0 ? (m.mean - target) / m.stderr_mean : 0.0;
    max_abs_z = std::max(max_abs_z, std::abs(z));
    if (std::abs(z) > 4.0) ++flagged;
    const std::string tag = "lag" + std::to_string(li);
    rep.aux[tag + "_r"] = lag_r;
    rep.aux[tag + "_cov"] = m.mean;
    rep.aux[tag + "_se"] = m.stderr_mean;
    rep.aux[tag + "_target"] = target;
    rep.aux[tag + "_z"] = z;
  }
  rep.value = max_abs_z;
  rep.aux["flagged_lags"] = flagged;
  if (flagged > 0) rep.note = "lags with |z| > 4 present";
  rep.set_interval();
  return rep;
}

}  // namespace lqg
