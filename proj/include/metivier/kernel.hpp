#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "metivier/group.hpp"
#include "metivier/multiplier.hpp"
#include "metivier/parallel.hpp"
#include "metivier/spectral.hpp"

namespace metivier {

struct QuadratureSpec {
  int radial_nodes = 32;     // Gauss-Legendre nodes per dyadic |mu| interval
  int angular_nodes = 16;    // see sphere_rule; ignored for d2 = 1
  double k_energy_cap = 0;   // 0: the upper end of supp F
  int x_radial_nodes = 64;   // per-block Gauss-Laguerre nodes in x-side integrals
  int k_max = 8192;          // hard cap on any single Laguerre degree
  double max_rel_error = 1e-3;
  double abs_tol = 0.0;      // errors below this are accepted whatever the relative size
  int tail_octaves = 10;     // ell = none: dyadic shells below supp F before the Euclidean tail
};

void validate(const QuadratureSpec& q);

struct KernelResult {
  std::complex<double> value;
  long k_terms = 0;            // largest number of k-terms summed at one mu node
  double quad_error_est = 0.0; // relative
  double abs_error_est = 0.0;
};

// sum_n (2 k_n + r_n) b_n
double eigenvalue_lambda(const SpectralDecomposition& dec, const std::vector<int>& k);

// All k with eigenvalue_lambda <= cap, lexicographic.
std::vector<std::vector<int>> enumerate_k(const SpectralDecomposition& dec, double cap);

// Smallest ell for which some k and some unit direction make
// lambda_k^mu in f_support compatible with 2^ell |mu| in chi_support, and
// ell0 = -ell_min. The ground energy is minimized over sampled directions,
// so the answer is only as good as the sampling. Empty when no ell works.
struct Ell0Result {
  int ell_min = 0;
  int ell0 = 0;
  double ground_min = 0.0;
};
std::optional<Ell0Result> ell0(const GroupSpec& spec, std::pair<double, double> f_support,
                               std::pair<double, double> chi_support, int samples = 512,
                               std::uint64_t seed = 0);

// Kernel of F(L) chi(2^ell U) at a point; ell = nullopt means no chi factor.
KernelResult eval_kernel(const GroupSpec& spec, const SampledMultiplier& F, std::optional<int> ell,
                         const Point& p, const QuadratureSpec& quad = {},
                         const ParallelFor& pfor = serial_for());

// Same x, many u. Node counts follow the largest |u| in the batch.
std::vector<KernelResult> eval_kernel_u_batch(const GroupSpec& spec, const SampledMultiplier& F,
                                              std::optional<int> ell, const Eigen::VectorXd& x,
                                              const std::vector<Eigen::VectorXd>& us,
                                              const QuadratureSpec& quad = {},
                                              const ParallelFor& pfor = serial_for());

// Euclidean kernel of F(-Delta) on R^{d1} at |x| = rx.
double euclidean_kernel(const SampledMultiplier& F, int d1, double rx, int nodes = 96);

struct MassResult {
  double value = 0.0;
  double quad_error_est = 0.0;  // relative, coarse-vs-fine rule
  long k_terms = 0;
};

// int_G |x|^{2 alpha} |K_ell(x, u)|^2 d(x, u) by Plancherel in u and the
// banded Laguerre moment tables.
MassResult weighted_l2_mass_first_layer(const GroupSpec& spec, const SampledMultiplier& F, int ell, int alpha,
                                        const QuadratureSpec& quad = {}, const ParallelFor& pfor = serial_for());

// alpha = 0 through the closed-form Laguerre norms instead of the tables.
MassResult mass_alpha0_closed(const GroupSpec& spec, const SampledMultiplier& F, int ell,
                              const QuadratureSpec& quad = {}, const ParallelFor& pfor = serial_for());

// max_i |K_{F(t^2 .), ell'}(p_i) - t^{-Q} K_{F, ell}(delta_{1/t} p_i)| / |rhs_i| with
// ell' = ell + 2 log2 t (t must then be a power of sqrt 2); ell = nullopt skips chi.
double dilation_covariance_check(const GroupSpec& spec, const SampledMultiplier& F, double t,
                                 const std::vector<Point>& points, std::optional<int> ell,
                                 const QuadratureSpec& quad = {}, const ParallelFor& pfor = serial_for());

}  // namespace metivier
