#ifndef LQG_SPECTRAL_HPP
#define LQG_SPECTRAL_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <vector>

#include "lqg/grid.hpp"
#include "lqg/heatkernel.hpp"
#include "lqg/measure.hpp"
#include "lqg/report.hpp"

namespace lqg {

// Open set U as a boolean cell mask, with 4-neighbor connectivity labels.
struct DomainMask {
  Grid grid;
  std::vector<std::uint8_t> inside;
  std::uint64_t inside_count = 0;
  double mass = 0.0;  // M(U)
  std::vector<std::int32_t> component;  // label per cell, -1 outside
  std::int32_t component_count = 0;
};

DomainMask make_mask(const LiouvilleGrid& m,
                     const std::function<bool(Vec2)>& pred);

// Keeps only the largest connected component.
DomainMask largest_component(const LiouvilleGrid& m, const DomainMask& mask);

// Pencil A phi = lambda D phi: A the half graph Laplacian (edge weight 1/2,
// Dirichlet by exclusion), D the diagonal of Liouville cell masses.
struct DirichletPencil {
  Grid grid;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd D;
  std::vector<std::int64_t> cells;        // flat cell index per dof
  std::vector<std::int64_t> dof_of_cell;  // -1 where excluded
  double mass = 0.0;
};

DirichletPencil assemble(const LiouvilleGrid& m, const DomainMask& mask);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;    // ||A phi - lambda D phi|| / ||A phi||
  Eigen::MatrixXd phi;              // D-orthonormal columns
  std::vector<std::int64_t> cells;
  std::vector<std::int64_t> dof_of_cell;
  double mass = 0.0;
};

// Smallest K pairs by shift-invert Lanczos with full reorthogonalization.
SpectralDecomposition eigensolve(const DirichletPencil& pencil, int K,
                                 double tol = 1e-8);

// Truncated eigen-sum p^U_t at two cells (flat indices); throws if the
// truncation tail e^{-lambda_K t} K exceeds 1e-6 of the current sum.
double eigen_heatkernel(const SpectralDecomposition& dec, std::int64_t cx,
                        std::int64_t cy, double t);

double heat_trace(const SpectralDecomposition& dec, double t);

// lambda_1 M(U) log(2 + 1/M(U))
double faber_krahn_ratio(const SpectralDecomposition& dec);

// m(t) = Phi^-1(t) for Phi(s) = int_s^inf du/theta(u),
// theta(s) = C9 s^2 / (32 log(2 + s/4)).
double nash_profile(double c9, double t);

// OLS of 2 log Z against -log t.
DimensionFit global_dimension(const std::vector<double>& ts,
                              const std::vector<double>& zs);

}  // namespace lqg

#endif
