#include "lqg/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "lqg/quadrature.hpp"
#include "lqg/rng.hpp"
#include "lqg/stats.hpp"

namespace lqg {

DomainMask make_mask(const LiouvilleGrid& m,
                     const std::function<bool(Vec2)>& pred) {
  DomainMask mask;
  mask.grid = m.grid;
  const auto& g = m.grid;
  mask.inside.assign(g.cell_count(), 0);
  mask.component.assign(g.cell_count(), -1);
  for (std::int64_t j = 0; j < g.n; ++j)
    for (std::int64_t i = 0; i < g.n; ++i) {
      const auto c = g.index(i, j);
      if (pred(g.center(i, j))) {
        mask.inside[c] = 1;
        ++mask.inside_count;
        mask.mass += m.mass[c];
      }
    }
  if (mask.inside_count == 0) throw std::invalid_argument("make_mask: empty");

  // 4-neighbor component labels by BFS
  for (std::int64_t j = 0; j < g.n; ++j)
    for (std::int64_t i = 0; i < g.n; ++i) {
      const auto c = g.index(i, j);
      if (!mask.inside[c] || mask.component[c] >= 0) continue;
      const std::int32_t label = mask.component_count++;
      std::deque<std::pair<std::int64_t, std::int64_t>> queue{{i, j}};
      mask.component[c] = label;
      while (!queue.empty()) {
        const auto [ci, cj] = queue.front();
        queue.pop_front();
        const std::pair<std::int64_t, std::int64_t> nb[4] = {
            {ci - 1, cj}, {ci + 1, cj}, {ci, cj - 1}, {ci, cj + 1}};
        for (const auto& [ni, nj] : nb) {
          if (ni < 0 || nj < 0 || ni >= g.n || nj >= g.n) continue;
          const auto nc = g.index(ni, nj);
          if (mask.inside[nc] && mask.component[nc] < 0) {
            mask.component[nc] = label;
            queue.push_back({ni, nj});
          }
        }
      }
    }
  return mask;
}

DomainMask largest_component(const LiouvilleGrid& m, const DomainMask& mask) {
  std::vector<std::uint64_t> sizes(mask.component_count, 0);
  for (auto lbl : mask.component)
    if (lbl >= 0) ++sizes[lbl];
  const std::int32_t keep =
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin();
  return make_mask(m, [&](Vec2 p) -> bool {
    std::int64_t i, j;
    mask.grid.locate(p, i, j);
    return mask.component[mask.grid.index(i, j)] == keep;
  });
}

DirichletPencil assemble(const LiouvilleGrid& m, const DomainMask& mask) {
  if (mask.inside_count == 0) throw std::invalid_argument("assemble: empty mask");
  if (mask.component_count != 1)
    throw std::invalid_argument(
        "assemble: mask disconnected; restrict to largest_component first");
  const auto& g = m.grid;
  DirichletPencil pencil;
  pencil.grid = g;
  pencil.mass = mask.mass;
  pencil.dof_of_cell.assign(g.cell_count(), -1);
  for (std::int64_t c = 0; c < std::int64_t(g.cell_count()); ++c)
    if (mask.inside[c]) {
      pencil.dof_of_cell[c] = std::int64_t(pencil.cells.size());
      pencil.cells.push_back(c);
    }
  const std::int64_t n = pencil.cells.size();
  pencil.D.resize(n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(5 * n);
  for (std::int64_t d = 0; d < n; ++d) {
    const auto c = pencil.cells[d];
    pencil.D[d] = m.mass[c];
    const std::int64_t i = c % g.n, j = c / g.n;
    double diag = 0.0;
    const std::pair<std::int64_t, std::int64_t> nb[4] = {
        {i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    for (const auto& [ni, nj] : nb) {
      diag += 0.5;  // outside neighbors are Dirichlet zeros
      if (ni < 0 || nj < 0 || ni >= g.n || nj >= g.n) continue;
      const auto dd = pencil.dof_of_cell[g.index(ni, nj)];
      if (dd >= 0) trips.emplace_back(d, dd, -0.5);
    }
    trips.emplace_back(d, d, diag);
  }
  pencil.A.resize(n, n);
  pencil.A.setFromTriplets(trips.begin(), trips.end());
  return pencil;
}

SpectralDecomposition eigensolve(const DirichletPencil& pencil, int K,
                                 double tol) {
  const std::int64_t n = pencil.cells.size();
  if (K < 1 || K > n)
    throw std::invalid_argument("eigensolve: K out of range");
  if (tol <= 0) throw std::invalid_argument("eigensolve: tol <= 0");

  // symmetric transform B = D^-1/2 A D^-1/2, Lanczos on B^-1
  const Eigen::VectorXd dsqrt = pencil.D.cwiseSqrt();
  const Eigen::VectorXd dinv = dsqrt.cwiseInverse();
  Eigen::SparseMatrix<double> B =
      dinv.asDiagonal() * pencil.A * dinv.asDiagonal();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(B);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolve: factorization failed");

  // complete or near-complete requests: dense decomposition, exact tail
  if (4 * std::int64_t(K) >= n && n <= 6000) {
    Eigen::MatrixXd Bd(B);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Bd);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("eigensolve: dense decomposition failed");
    SpectralDecomposition dec;
    dec.cells = pencil.cells;
    dec.dof_of_cell = pencil.dof_of_cell;
    dec.mass = pencil.mass;
    dec.phi.resize(n, K);
    for (int k = 0; k < K; ++k) {
      dec.eigenvalues.push_back(es.eigenvalues()[k]);
      dec.phi.col(k) = dinv.asDiagonal() * es.eigenvectors().col(k);
      const Eigen::VectorXd aphi = pencil.A * dec.phi.col(k);
      const Eigen::VectorXd res =
          aphi - dec.eigenvalues[k] * (pencil.D.asDiagonal() * dec.phi.col(k));
      const double rel = res.norm() / aphi.norm();
      dec.residuals.push_back(rel);
      if (rel > tol)
        throw std::runtime_error("eigensolve: dense residual above tolerance");
    }
    return dec;
  }

  const rng::Stream noise(0x9e3779b97f4a7c15ull, rng::kShuffle, 0);
  auto random_unit = [&](std::uint64_t offset) {
    Eigen::VectorXd v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = noise.normal(offset + i);
    return v;
  };

  int m_cap = std::min<std::int64_t>(n, std::max(2 * K + 50, K + 100));
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::vector<Eigen::VectorXd> V;
    std::vector<double> alpha, beta;  // beta[j] couples v_j and v_{j+1}
    Eigen::VectorXd v = random_unit(0);
    v.normalize();
    V.push_back(v);
    std::uint64_t refresh = 1;
    for (int j = 0; j < m_cap; ++j) {
      Eigen::VectorXd w = solver.solve(V[j]);
      const double a = V[j].dot(w);
      alpha.push_back(a);
      w -= a * V[j];
      if (j > 0) w -= beta[j - 1] * V[j - 1];
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& u : V) w -= u.dot(w) * u;
      double b = w.norm();
      if (b < 1e-13) {
        if (std::int64_t(V.size()) >= n) break;
        w = random_unit(refresh++ * std::uint64_t(n));
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& u : V) w -= u.dot(w) * u;
        b = w.norm();
        if (b < 1e-13) break;
        beta.push_back(0.0);
      } else {
        beta.push_back(b);
      }
      V.push_back(w / b);
    }
    const int m = alpha.size();
    if (m < K) throw std::runtime_error("eigensolve: Krylov space exhausted");

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    // largest Ritz values of B^-1 are the smallest eigenvalues of B
    SpectralDecomposition dec;
    dec.cells = pencil.cells;
    dec.dof_of_cell = pencil.dof_of_cell;
    dec.mass = pencil.mass;
    dec.phi.resize(n, K);
    bool converged = true;
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < m; ++j) order.push_back({es.eigenvalues()[j], j});
    std::sort(order.rbegin(), order.rend());
    for (int k = 0; k < K; ++k) {
      const auto [mu, col] = order[k];
      if (mu <= 0) {
        converged = false;
        break;
      }
      Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);
      for (int j = 0; j < m; ++j) psi += es.eigenvectors()(j, col) * V[j];
      psi.normalize();
      dec.eigenvalues.push_back(1.0 / mu);
      dec.phi.col(k) = dinv.asDiagonal() * psi;
    }
    if (converged) {
      // enforce ordering and D-orthonormality, then check residuals
      std::vector<int> idx(K);
      for (int k = 0; k < K; ++k) idx[k] = k;
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return dec.eigenvalues[a] < dec.eigenvalues[b];
      });
      Eigen::MatrixXd phi(n, K);
      std::vector<double> lam(K);
      for (int k = 0; k < K; ++k) {
        phi.col(k) = dec.phi.col(idx[k]);
        lam[k] = dec.eigenvalues[idx[k]];
      }
      for (int k = 0; k < K; ++k) {
        for (int j = 0; j < k; ++j)
          phi.col(k) -=
              (phi.col(j).dot(pencil.D.asDiagonal() * phi.col(k))) * phi.col(j);
        const double nrm =
            std::sqrt(phi.col(k).dot(pencil.D.asDiagonal() * phi.col(k)));
        if (nrm < 1e-13) {
          converged = false;
          break;
        }
        phi.col(k) /= nrm;
      }
      if (converged) {
        dec.phi = phi;
        dec.eigenvalues = lam;
        dec.residuals.clear();
        for (int k = 0; k < K; ++k) {
          const Eigen::VectorXd aphi = pencil.A * dec.phi.col(k);
          const Eigen::VectorXd res =
              aphi - dec.eigenvalues[k] * (pencil.D.asDiagonal() * dec.phi.col(k));
          const double rel = res.norm() / aphi.norm();
          dec.residuals.push_back(rel);
          if (rel > tol) converged = false;
        }
      }
    }
    if (converged) return dec;
    if (m_cap >= n) break;
    m_cap = std::min<std::int64_t>(n, 2 * m_cap);
  }
  throw std::runtime_error(
      "eigensolve: residual tolerance not met within iteration budget");
}

namespace {

double tail_checked_sum(const SpectralDecomposition& dec, double t,
                        const std::function<double(int)>& term) {
  double sum = 0.0;
  const int K = dec.eigenvalues.size();
  for (int k = 0; k < K; ++k) sum += std::exp(-dec.eigenvalues[k] * t) * term(k);
  if (std::size_t(K) == dec.cells.size()) return sum;  // complete: no tail
  const double tail = std::exp(-dec.eigenvalues.back() * t) * double(K);
  if (tail >= 1e-6 * std::abs(sum))
    throw std::runtime_error(
        "spectral truncation tail above tolerance: increase K or t");
  return sum;
}

}  // namespace

double eigen_heatkernel(const SpectralDecomposition& dec, std::int64_t cx,
                        std::int64_t cy, double t) {
  const auto dx = dec.dof_of_cell.at(cx), dy = dec.dof_of_cell.at(cy);
  if (dx < 0 || dy < 0)
    throw std::invalid_argument("eigen_heatkernel: cell outside the domain");
  return tail_checked_sum(
      dec, t, [&](int k) { return dec.phi(dx, k) * dec.phi(dy, k); });
}

double heat_trace(const SpectralDecomposition& dec, double t) {
  return tail_checked_sum(dec, t, [](int) { return 1.0; });
}

double faber_krahn_ratio(const SpectralDecomposition& dec) {
  return dec.eigenvalues.front() * dec.mass * std::log(2.0 + 1.0 / dec.mass);
}

namespace {

double nash_phi(double c9, double s) {
  return 32.0 / c9 *
         quad::integrate_to_inf(
             [](double u) { return std::log(2.0 + u / 4.0) / (u * u); }, s,
             1e-12);
}

}  // namespace

double nash_profile(double c9, double t) {
  if (c9 <= 0 || t <= 0) throw std::invalid_argument("nash_profile: bad input");
  // Phi is decreasing; bracket the root in log space
  double lo = 1.0, hi = 1.0;
  while (nash_phi(c9, lo) < t) {
    lo /= 4.0;
    if (lo < 1e-300) return lo;
  }
  while (nash_phi(c9, hi) > t) {
    hi *= 4.0;
    if (hi > 1e300) return hi;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (nash_phi(c9, mid) > t ? lo : hi) = mid;
    if (hi / lo < 1.0 + 1e-14) break;
  }
  return std::sqrt(lo * hi);
}

DimensionFit global_dimension(const std::vector<double>& ts,
                              const std::vector<double>& zs) {
  if (ts.size() != zs.size())
    throw std::invalid_argument("global_dimension: size mismatch");
  if (ts.size() < 5)
    throw std::invalid_argument("global_dimension: need >= 5 points");
  const auto [mn, mx] = std::minmax_element(ts.begin(), ts.end());
  if (*mx / *mn < 10.0)
    throw std::invalid_argument("global_dimension: t grid under a decade");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    xs.push_back(-std::log(ts[i]));
    ys.push_back(2.0 * std::log(zs[i]));
  }
  const auto fit = stats::ols(xs, ys);
  DimensionFit out;
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.r2 = fit.r2;
  out.t_min = *mn;
  out.t_max = *mx;
  out.n_points = ts.size();
  return out;
}

}  // namespace lqg
