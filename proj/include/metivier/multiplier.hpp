#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace metivier {

enum class Parity { Even, None };

// Uniform grid lo + i * step, i = 0..n-1. n is always a power of two.
struct Grid {
  double lo = 0.0;
  double step = 0.0;
  std::size_t n = 0;
  double hi() const { return lo + step * static_cast<double>(n - 1); }
};

// Default frequency-work grid: 2^14 nodes on [-8, 8), step 2^-10.
// For even parity only the nonnegative half [0, 8) is stored.
Grid default_grid(Parity parity);

struct SampledMultiplier {
  Grid grid;
  std::vector<std::complex<double>> values;
  double supp_lo = 0.0;  // metadata, inclusive
  double supp_hi = 0.0;
  Parity parity = Parity::None;
  std::string spec;  // canonical expression, or a free-form label

  // 4-point cubic Lagrange interpolation; even parity evaluates at |lambda|;
  // zero outside the stored hull.
  std::complex<double> operator()(double lambda) const;
  double real_at(double lambda) const { return (*this)(lambda).real(); }

  // [lo, hi] outside which the interpolant vanishes identically.
  std::pair<double, double> nonzero_hull() const;
  double sup_abs() const;
  bool is_zero() const;
};

SampledMultiplier sample_function(const std::function<std::complex<double>(double)>& f, const Grid& grid,
                                  Parity parity, double supp_lo, double supp_hi, std::string label);

// Grid covering [0, need_hi] (even) or [-need_hi, need_hi) (none) with the
// default step and a power-of-two node count.
Grid grid_covering(Parity parity, double need_hi);

// F(lambda) = (1 - t lambda)_+^delta for lambda >= 0, zero for lambda < 0.
SampledMultiplier bochner_riesz(double delta, double t);
SampledMultiplier bochner_riesz(double delta, double t, const Grid& grid);

// exp(16/9 - 1/((s - 1/2)(2 - s))) with s the affine image of |lambda| from
// [a, b] onto [1/2, 2]; even, peak value 1, supported in [a, b].
SampledMultiplier bump(double a, double b);

// psi0(t) = exp(-1/((t - 1/2)(2 - t))) on (1/2, 2).
double psi0(double t);
// chi(lambda) = psi0(|lambda|) / sum_j psi0(2^-j |lambda|), chi_iota = chi(. / 2^iota)
double dyadic_chi_value(int iota, double lambda);
SampledMultiplier dyadic_chi(int iota);
SampledMultiplier dyadic_chi(int iota, const Grid& grid);

// G(lambda) = F(s lambda). Exact: the grid is rescaled, values are shared.
SampledMultiplier dilate_multiplier(const SampledMultiplier& F, double s);

// sqrt(sum |F_i|^2 step) over the full line (even parity mirrored).
double l2_norm(const SampledMultiplier& F);

// (F^ chi_iota)^v through a zero-padded DFT (padding x4). The DC bin is
// treated as if it sat at half the frequency spacing so that the pieces over
// all iota sum back to F.
SampledMultiplier freq_localize(const SampledMultiplier& F, int iota);
// Range of iota for which freq_localize can be nonzero on F's grid.
std::pair<int, int> freq_iota_range(const SampledMultiplier& F);

struct SobolevResult {
  double value = 0.0;
  double tail_fraction = 0.0;  // share of the weighted energy in the top frequency octave
  bool flagged = false;        // tail_fraction > kSobolevTailTol
  double argmax_t = 0.0;       // sloc only
};
inline constexpr double kSobolevTailTol = 1e-8;

// (int (1 + tau^2)^s |F^(tau)|^2 dtau / 2pi)^{1/2}. With strict = true a
// flagged tail throws NumericalError.
SobolevResult sobolev_norm(const SampledMultiplier& F, double s, bool strict = true);

// max over t in t_grid of ||F(t .) eta||_{L^2_s}, eta = chi restricted to
// (0, inf). A lower bound for the supremum over all t > 0.
SobolevResult sloc_norm(const SampledMultiplier& F, double s, const std::vector<double>& t_grid,
                        bool strict = true);

// (1/M sum_K sup_{[(K-1)/M, K/M)} |F|^2)^{1/2}; the sup per cell runs over
// stored nodes plus samples_per_cell points of the piecewise-linear
// interpolant, so this is a lower bound that increases with sampling.
double cowling_sikora_norm(const SampledMultiplier& F, double M, int samples_per_cell = 32);

// Expression language:
//   br:delta=<d>,t=<t>
//   bump:<a>,<b>
//   file:<path>      two or three CSV columns lambda,re[,im]; uniform,
//                    power-of-two rows; "# parity: even" comment allowed
SampledMultiplier parse_multiplier(const std::string& expr);
// Canonical expression; parse_multiplier(F.spec) reproduces F.
std::string multiplier_spec(const SampledMultiplier& F);

}  // namespace metivier
