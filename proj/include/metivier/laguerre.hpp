#pragma once

#include <vector>

#include <Eigen/Dense>

namespace metivier {

// Degree cap for the quadrature-based routines below.
inline constexpr int kLaguerreDegreeCap = 512;

// Three-term recurrence; plain double precision.
double laguerre_poly(int k, double a, double t);

// out[j] = L_j^a(t) * exp(log_factor) for j = 0..kmax. The recurrence carries
// its own exponent so huge intermediate values do not overflow.
void laguerre_scaled_sequence(int kmax, double a, double t, double log_factor, double* out);

// phi_k^{(lambda,m)}(z) = lambda^m L_k^{m-1}(lambda |z|^2 / 2) exp(-lambda |z|^2 / 4)
double phi(int k, double lambda, int m, const Eigen::VectorXd& z);
double phi_radial(int k, double lambda, int m, double z2);

// (-1)^k L_k^{r-1}(2t) e^{-t}
double script_L(int k, int r, double t);

// ||phi_k^{(lambda,m)}||^2 on R^{2m} by radial Gauss-Laguerre with node doubling.
double phi_l2_norm_sq(int k, double lambda, int m);
// lambda^m (2 pi)^m binom(k+m-1, k)
double phi_l2_norm_sq_closed(int k, double lambda, int m);

// int_{R^{2m}} |z|^{2j} phi_k phi_kp dz, by quadrature.
double phi_moment(int k, int kp, double lambda, int m, int j);

// Max relative residual of (-Delta_h + lambda^2 |z|^2 / 4) phi - (2k+m) lambda phi
// at radial samples along two directions, central differences of step h.
double hermite_residual(int k, double lambda, int m, double h);

// || |z|^beta phi_k || / (lambda^{-beta} ((2k+m) lambda)^{beta/2} ||phi_k||)
double subelliptic_ratio(int k, double lambda, int m, double beta);

// Banded table of unit-scale block moments
//   M1(k, k') = int_{R^{2r}} |y|^{2m} phi_k^{(1,r)}(y) phi_k'^{(1,r)}(y) dy,
// zero outside |k - k'| <= m. Scaling: the lambda-version equals lambda^{r-m} M1.
struct BandTable {
  int kmax = -1;
  int band = 0;
  std::vector<double> v;  // (kmax+1) x (2 band + 1)
  double at(int k, int kp) const {
    int d = kp - k;
    if (d < -band || d > band || k < 0 || kp < 0 || k > kmax || kp > kmax) return 0.0;
    return v[static_cast<std::size_t>(k) * (2 * band + 1) + (d + band)];
  }
};
BandTable radial_moment_table(int r, int m, int kmax);

}  // namespace metivier
