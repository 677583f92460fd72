#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "metivier/group.hpp"
#include "metivier/kernel.hpp"
#include "metivier/multiplier.hpp"
#include "metivier/numerology.hpp"
#include "metivier/parallel.hpp"

namespace metivier {

struct ScanRow {
  int ell = 0;
  int alpha = 0;
  double mass = 0.0;
  double rhs_model = 0.0;       // 2^{ell (2 alpha - d2)} times the squared norm of F
  double quad_error_est = 0.0;  // relative
};

struct ScanReport {
  int alpha = 0;
  std::vector<ScanRow> rows;  // sorted by ell
  double fitted_slope = 0.0;  // least squares of log2(mass) against ell; NaN if some mass is 0
  double slope_target = 0.0;  // 2 alpha - d2
  double residual = 0.0;      // rms misfit of the fit, in log2 units
  double implied_constant = 0.0;  // max_ell mass / rhs_model
  double max_quad_error = 0.0;
  // second layer only
  bool fd_unstable = false;
  double fd_change = 0.0;  // relative mass change when fd_step is halved (worst ell)
};

// Unweighted least squares of ys against xs: {slope, rms residual}.
std::pair<double, double> fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// One report per alpha; the model uses l2_norm(F)^2.
std::vector<ScanReport> first_layer_scan(const GroupSpec& spec, const SampledMultiplier& F,
                                         const std::vector<int>& alphas, std::pair<int, int> ell_range,
                                         const QuadratureSpec& quad = {}, const ParallelFor& pfor = serial_for());

// Weighted mass int <u, v>^{2 alpha} |K_ell|^2 on metivier_4_3(A), v the
// direction from kerA_classify, alpha in {0, 1}. Plancherel in u and x turns it
// into (2 pi)^{-d2 - 2 d1} int int |d_v^alpha V(xi, mu)|^2 dxi dmu with
//   V(xi, mu) = sum_k F(lambda_k^mu) chi(2^ell |mu|) prod_n (4 pi)^{r_n} script_L(k_n, r_n, |P_n xi|^2 / b_n^mu).
// The xi-integral is done exactly: V depends on xi through |P_n xi|^2 only,
// d_v |P_1 xi|^2 = 2 <P_1 xi, (d_v P_1) P_2 xi> averages out over the two
// spheres, and what is left factorizes into Laguerre Gram matrices. d_v acts
// on b_n, P_1 and the coefficients by central differences with step
// fd_step |mu|.
struct SecondLayerResult {
  double mass = 0.0;
  double quad_error_est = 0.0;
  long k_terms = 0;
  int skipped = 0;  // mu nodes on the single-eigenvalue branch
};
SecondLayerResult second_layer_mass_43(const Eigen::Matrix3d& A, const SampledMultiplier& F, int ell, int alpha,
                                       double fd_step = 1e-4, const QuadratureSpec& quad = {},
                                       const ParallelFor& pfor = serial_for());

// The mu-integrand int |d_v^alpha V(xi, mu)|^2 dxi at a single mu.
double second_layer_density_43(const Eigen::Matrix3d& A, const SampledMultiplier& F, int ell, int alpha,
                               const Eigen::Vector3d& mu, double fd_step = 1e-4);

// Runs second_layer_mass_43 at fd_step and fd_step / 2 for every ell; the
// model uses ||F||_{L^2_alpha}^2 (Sobolev norm from the multiplier module).
// fd_unstable is set when the two differ by more than 5% relative.
ScanReport second_layer_scan_43(const Eigen::Matrix3d& A, const SampledMultiplier& F, int alpha,
                                std::pair<int, int> ell_range, const QuadratureSpec& quad = {},
                                double fd_step = 1e-4, const ParallelFor& pfor = serial_for());

// Gaussian trial f(x, u) = exp(-|x|^2 / (2 s^2) - |u|^2 / (2 tau^2)).
struct GaussianTrial {
  double s = 1.0;
  double tau = 1.0;
};

struct RestrictionRow {
  int ell = 0;
  double lower_bound = 0.0;  // max over trials of ||F(L) chi(2^ell U) f||_2 / ||f||_p
  GaussianTrial best;
  double rhs = 0.0;          // 2^{-ell d2 (1/p - 1/2)} ||F||_2^{1 - theta_p} ||F||_{2^ell,2}^{theta_p};
                             // NaN when p exceeds the range of theta_p
  double ratio = 0.0;        // lower_bound / rhs
  double quad_error_est = 0.0;  // of the best trial
  bool flagged = false;      // quad_error_est above max_rel_error
};

// Heisenberg-type groups only: there every radial trial splits exactly into
// Laguerre modes, so the L^2 norm is a one-dimensional mu-integral. The
// Cowling-Sikora norm is itself a lower bound (see cowling_sikora_norm), so
// the reported ratio is only indicative.
std::vector<RestrictionRow> restriction_scaling_probe(const GroupSpec& spec, const SampledMultiplier& F,
                                                      const Rational& p, std::pair<int, int> ell_range,
                                                      const std::vector<GaussianTrial>& trials,
                                                      const QuadratureSpec& quad = {});

// 0.5 .. 4 in x times 0.5 .. 32 in u, octave steps.
std::vector<GaussianTrial> default_gaussian_trials();

// ||F(L) chi(2^ell U) f||_2 for one Gaussian trial, with its coarse-rule error.
std::pair<double, double> gaussian_trial_norm(const GroupSpec& spec, const SampledMultiplier& F, int ell,
                                              const GaussianTrial& g, const QuadratureSpec& quad = {});
// ||f||_p of the Gaussian trial on R^{d1} x R^{d2}.
double gaussian_trial_lp(int d1, int d2, const GaussianTrial& g, double p);

}  // namespace metivier
