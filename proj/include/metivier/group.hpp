#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace metivier {

// Two-step stratified group g = g1 + g2 with [X_i, X_j] = sum_k c[k][i][j] U_k.
// Indices are 0-based here; the JSON format is 1-based.
//
// Sign convention used everywhere: (J_mu)_{j,i} = sum_k mu_k c[k][i][j],
// i.e. <J_mu e_i, e_j> = mu([e_i, e_j]).
struct GroupSpec {
  int d1 = 0;
  int d2 = 0;
  std::vector<double> c;  // d2 * d1 * d1, row-major in (k, i, j)

  double at(int k, int i, int j) const { return c[(static_cast<std::size_t>(k) * d1 + i) * d1 + j]; }
  double& at(int k, int i, int j) { return c[(static_cast<std::size_t>(k) * d1 + i) * d1 + j]; }
  int Q() const { return d1 + 2 * d2; }
};

struct Point {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
};

// Throws ValidationError on antisymmetry or bracket-generation failure.
void validate(const GroupSpec& spec);

// Builds a spec from sparse (k, i, j, v) triples (0-based) completing
// antisymmetry; conflicting or diagonal entries are rejected.
struct StructureConstant {
  int k, i, j;
  double v;
};
GroupSpec make_group(int d1, int d2, const std::vector<StructureConstant>& entries);

Eigen::MatrixXd j_matrix(const GroupSpec& spec, const Eigen::VectorXd& mu);
Eigen::VectorXd bracket(const GroupSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& xp);

Point group_multiply(const GroupSpec& spec, const Point& p, const Point& q);
Point group_inverse(const Point& p);
Point dilate(double R, const Point& p);
double homogeneous_norm(const Point& p);
void check_point(const GroupSpec& spec, const Point& p);

struct MetivierVerdict {
  bool verdict = false;
  double min_sv = 0.0;
  Eigen::VectorXd witness_mu;  // sample attaining min_sv
  int n_samples = 0;
  double tol = 0.0;
  bool sampled = true;  // positive verdicts rest on finitely many samples
};
MetivierVerdict is_metivier(const GroupSpec& spec, int n_samples, double tol, std::uint64_t seed = 0);

double heisenberg_type_residual(const GroupSpec& spec);
bool is_heisenberg_type(const GroupSpec& spec, double tol);

GroupSpec heisenberg(int n);
GroupSpec metivier_4_3(const Eigen::Matrix3d& A);

}  // namespace metivier
