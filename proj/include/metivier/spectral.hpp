#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "metivier/group.hpp"

namespace metivier {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, orthonormal
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius mass is at most
// tol * ||S||_F. Throws on asymmetric input or after 30 sweeps.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& S, double tol = 1e-15);

// -J^2 = sum_n b_n^2 P_n (+ 0 * P0).
struct SpectralDecomposition {
  int N = 0;
  std::vector<double> b;  // strictly decreasing
  std::vector<int> r;     // rank P_n = 2 r_n
  std::vector<Eigen::MatrixXd> P;
  int r0 = 0;
  Eigen::MatrixXd P0;
  double gap = std::numeric_limits<double>::infinity();  // min b_n/b_{n+1} - 1; inf if N == 1
};

SpectralDecomposition decompose_skew(const Eigen::MatrixXd& J, double cluster_rel_tol = 1e-6);
SpectralDecomposition decompose_j(const GroupSpec& spec, const Eigen::VectorXd& mu,
                                  double cluster_rel_tol = 1e-6);

// so(4) = su(2) + su(2) blocks.
Eigen::Matrix4d jminus(const Eigen::Vector3d& xi);
Eigen::Matrix4d jplus(const Eigen::Vector3d& eta);
// Inner product -tr(J J')/4, normalized so that J-(xi)+J+(eta) is an isometry
// from R^3 + R^3.
double so4_inner(const Eigen::Matrix4d& J, const Eigen::Matrix4d& Jp);

std::pair<double, double> so4_eigenvalues(const Eigen::Vector3d& xi, const Eigen::Vector3d& eta);
// Requires xi != 0, eta != 0, |xi| != |eta|; P1 belongs to b1 = |xi|+|eta|.
std::pair<Eigen::Matrix4d, Eigen::Matrix4d> so4_projections(const Eigen::Vector3d& xi,
                                                            const Eigen::Vector3d& eta);

std::pair<double, double> metivier43_eigen(const Eigen::Matrix3d& A, const Eigen::Vector3d& xi);

// Spectral data of J(xi, A xi) by closed forms, with the single-eigenvalue
// branch when A xi = 0 or |A xi| = |xi|. Throws when b2 = 0 (not Metivier at xi).
SpectralDecomposition metivier43_decompose(const Eigen::Matrix3d& A, const Eigen::Vector3d& xi,
                                           double degenerate_rel_tol = 1e-12);

enum class KerClass { ZERO, FULL, INTERMEDIATE };
struct KerAResult {
  KerClass cls = KerClass::ZERO;
  Eigen::Vector3d v = Eigen::Vector3d::UnitZ();
  bool v_is_kernel = false;
};
KerAResult kerA_classify(const Eigen::Matrix3d& A, double tol = 1e-10);
const char* to_string(KerClass c);

struct DerivativeProbeRow {
  Eigen::Vector3d mu;
  int N;  // 1 on the single-eigenvalue branch (then b2 = b1 and only n = 0 is filled)
  double b1, b2;
  double Db_rel[2][2];  // [alpha-1][n] = |D^alpha b_n| / b_n
  double DP_op[2][2];   // [alpha-1][n] = ||D^alpha P_n||_op
};
struct DerivativeProbe {
  double kappa_b = 0.0;
  double kappa_P = 0.0;
  int skipped = 0;
  std::vector<DerivativeProbeRow> table;
};
// D = |mu| d/dv. Steps are h1 * |mu| (first derivative) and h2 * |mu| (second).
DerivativeProbe mu_derivative_bounds_probe(const Eigen::Matrix3d& A, const Eigen::Vector3d& v,
                                           int sphere_samples, int max_alpha = 2, double h1 = 1e-4,
                                           double h2 = 1e-3, std::uint64_t seed = 0);

}  // namespace metivier
