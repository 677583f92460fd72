#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "metivier/kernel.hpp"
#include "metivier/multiplier.hpp"
#include "metivier/parallel.hpp"

namespace metivier {

// Sub-Laplacian of H1 on the grid (i - n/2) h, i = 0..n-1, h = 2B/n, in each
// of x, y, u, with zero values outside (Dirichlet). Fields
//   X1 = d_x - (y/2) d_u,   X2 = d_y + (x/2) d_u.
// L_h = 1/2 sum_i (X_i^+)^T X_i^+ + (X_i^-)^T X_i^- with one-sided differences:
// symmetric and PSD by construction, a compact 3x3x3 stencil, second order.
// (Central-difference fields give a stencil of width 2 that only couples a
// sublattice, so their delta response is useless as a kernel oracle.)
struct DiscreteOperator {
  int n = 0;
  double B = 0.0;
  double h = 0.0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> L;

  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n + j) * n + k;  // (x, y, u)
  }
  double coord(int i) const { return (i - n / 2) * h; }
};

DiscreteOperator build_sub_laplacian(int n, double B);

// Field applications on grid vectors (zero outside the box).
enum class Difference { Central, Forward, Backward };
Eigen::VectorXd apply_field(const DiscreteOperator& op, int which, const Eigen::VectorXd& v,
                            Difference d = Difference::Central);
Eigen::VectorXd apply_du(const DiscreteOperator& op, const Eigen::VectorXd& v);  // central d_u

// max_i (sum_{j != i} |L_ij| - L_ii); <= 0 means Gershgorin alone proves PSD.
double gershgorin_defect(const DiscreteOperator& op);
// max_i sum_j |L_ij|
double gershgorin_upper(const DiscreteOperator& op);
// max |L_ij - L_ji|
double symmetry_defect(const DiscreteOperator& op);

Eigen::VectorXd apply(const DiscreteOperator& op, const Eigen::VectorXd& v, const ParallelFor& pfor = serial_for());

// 50 power steps from a fixed start, times 1.01.
double lambda_max_estimate(const DiscreteOperator& op, const ParallelFor& pfor = serial_for());

struct ChebyshevResult {
  Eigen::VectorXd value;
  double lambda_max = 0.0;
  double tail = 0.0;  // sum of |c_j| for degree < j <= 2 degree: error bound per unit ||vec||
};

// F(L_h) vec by the Chebyshev expansion of F on [0, lambda_max]. Throws
// ValidationError for degree < 4 and NumericalError when tail > tail_tol * max|F|.
ChebyshevResult chebyshev_apply(const std::function<double(double)>& F, const DiscreteOperator& op,
                                const Eigen::VectorXd& vec, int degree, double tail_tol = 1e-3,
                                const ParallelFor& pfor = serial_for());

struct OracleLevel {
  int n = 0;
  double B = 0.0;
  double h = 0.0;
  double rel_error = 0.0;  // ||v - K||_2 / ||K||_2 over the grid
  int degree = 0;  // Chebyshev degree used: the requested one, doubled up to 8x until the tail passes
  double cheb_tail = 0.0;
  double lambda_max = 0.0;
  double box_mass_fraction = 0.0;  // 1 - (grid mass of K) / ||K||^2
};

struct OracleComparison {
  std::vector<OracleLevel> levels;
  bool monotone = true;  // errors strictly decrease
  bool box_ok = true;     // box_mass_fraction <= 1e-4 at the widest box
  double box_mass_fraction = 0.0;
};

// ||K||_2^2 of F(L) on H1: (1/16) int lambda F(lambda)^2 dlambda.
double h1_kernel_l2_sq(const SampledMultiplier& F);

// For each (n, B): v = F(L_h) delta_0 / h^3 against eval_kernel at the grid
// points. Throws ValidationError if supp F leaves [1/2, 2] or, with strict,
// if at the widest box more than 1e-4 of ||K||^2 lies outside it (the grid
// Riemann sum of |K|^2 against the closed-form total).
OracleComparison kernel_oracle_compare(const SampledMultiplier& F, const std::vector<std::pair<int, double>>& levels,
                                       int degree = 256, bool strict = true, const QuadratureSpec& quad = {},
                                       const ParallelFor& pfor = serial_for());

}  // namespace metivier
