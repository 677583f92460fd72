#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace metivier {

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
  std::vector<double> logw;  // Gauss-Laguerre only: w underflows for large n
};

// Gauss-Legendre on [-1, 1]. Cached per n; safe to call concurrently.
const QuadRule& gauss_legendre(int n);

// Gauss-Legendre mapped to [a, b].
QuadRule gauss_legendre(int n, double a, double b);

// Generalized Gauss-Laguerre for the weight t^alpha e^{-t} on (0, inf).
// Nodes from the Jacobi matrix eigenvalues, polished by Newton; weights
// through the log-scaled three-term recurrence so large n does not overflow.
const QuadRule& gauss_laguerre(int n, double alpha = 0.0);

// Product rule on the unit sphere S^{dim-1} with weights summing to its area.
//   dim = 1: the two points +-1
//   dim = 2: n equispaced angles
//   dim = 3: n Gauss-Legendre nodes in cos(theta) times 2n equispaced phi
struct SphereRule {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> w;
};
SphereRule sphere_rule(int dim, int n);

// Deterministic low-discrepancy points on S^{dim-1}. Different seeds give
// rotated / shifted copies of the same construction.
std::vector<Eigen::VectorXd> sphere_samples(int dim, int n, std::uint64_t seed = 0);

}  // namespace metivier
