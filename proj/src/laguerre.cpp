#include "metivier/laguerre.hpp"

#include <cmath>
#include <numbers>

#include "metivier/errors.hpp"
#include "metivier/quadrature.hpp"

namespace metivier {

double laguerre_poly(int k, double a, double t) {
  if (k < 0) throw ValidationError("laguerre_poly: negative degree");
  if (k == 0) return 1.0;
  double p0 = 1.0, p1 = 1.0 + a - t;
  for (int j = 1; j < k; ++j) {
    double p2 = ((2.0 * j + 1.0 + a - t) * p1 - (j + a) * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

void laguerre_scaled_sequence(int kmax, double a, double t, double log_factor, double* out) {
  if (kmax < 0) return;
  double S = log_factor;
  double f = std::exp(S);
  double p0 = 1.0;
  out[0] = f;
  if (kmax == 0) return;
  double p1 = 1.0 + a - t;
  out[1] = p1 * f;
  for (int j = 1; j < kmax; ++j) {
    double p2 = ((2.0 * j + 1.0 + a - t) * p1 - (j + a) * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
    if (std::abs(p1) > 1e100) {
      p0 *= 1e-100;
      p1 *= 1e-100;
      S += 100.0 * std::numbers::ln10;
      f = std::exp(S);
    }
    out[j + 1] = p1 * f;
  }
}

double phi_radial(int k, double lambda, int m, double z2) {
  if (k < 0 || m < 1 || !(lambda > 0.0)) throw ValidationError("phi: invalid parameters");
  const double t = 0.5 * lambda * z2;
  std::vector<double> seq(k + 1);
  laguerre_scaled_sequence(k, m - 1.0, t, m * std::log(lambda) - 0.5 * t, seq.data());
  return seq[k];
}

double phi(int k, double lambda, int m, const Eigen::VectorXd& z) {
  if (z.size() != 2 * m) throw ValidationError("phi: z must have dimension 2m");
  return phi_radial(k, lambda, m, z.squaredNorm());
}

double script_L(int k, int r, double t) {
  if (t < 0.0) throw ValidationError("script_L: t must be nonnegative");
  if (k < 0 || r < 1) throw ValidationError("script_L: invalid parameters");
  std::vector<double> seq(k + 1);
  laguerre_scaled_sequence(k, r - 1.0, 2.0 * t, -t, seq.data());
  return (k % 2 == 0 ? 1.0 : -1.0) * seq[k];
}

namespace {

// C_m(j) * int s^{m-1+j} L_k^{m-1}(s) L_kp^{m-1}(s) e^{-s} ds with n nodes, where the
// prefactor turns it into the unit-scale moment int |z|^{2j} phi_k phi_kp dz.
double unit_moment(int k, int kp, int m, int j, int n) {
  const QuadRule& g = gauss_laguerre(n, m - 1.0);
  const int kk = std::max(k, kp);
  std::vector<double> seq(kk + 1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = g.x[i];
    laguerre_scaled_sequence(kk, m - 1.0, x, 0.5 * g.logw[i], seq.data());
    s += std::pow(x, j) * seq[k] * seq[kp];
  }
  const double pref = std::pow(std::numbers::pi, m) / std::tgamma(m) * std::pow(2.0, m + j);
  return pref * s;
}

double converged_moment(int k, int kp, int m, int j) {
  if (k > kLaguerreDegreeCap || kp > kLaguerreDegreeCap)
    throw ValidationError("Laguerre degree exceeds the cap of 512");
  int n = 64;
  while (n < std::max(k, kp) + j + 2) n *= 2;
  double prev = unit_moment(k, kp, m, j, n);
  for (;;) {
    if (n * 2 > 1024) throw NumericalError("Laguerre quadrature: no convergence below 1024 nodes");
    n *= 2;
    double cur = unit_moment(k, kp, m, j, n);
    double scale = std::max(std::abs(cur), std::abs(prev));
    if (std::abs(cur - prev) <= 1e-11 * scale || scale == 0.0) return cur;
    // Off-diagonal moments that vanish exactly: compare against the diagonal scale.
    double diag = std::sqrt(std::abs(unit_moment(k, k, m, j, n) * unit_moment(kp, kp, m, j, n)));
    if (std::abs(cur - prev) <= 1e-11 * diag) return cur;
    prev = cur;
  }
}

}  // namespace

double phi_l2_norm_sq(int k, double lambda, int m) {
  if (k < 0 || m < 1 || !(lambda > 0.0)) throw ValidationError("phi_l2_norm_sq: invalid parameters");
  return std::pow(lambda, m) * converged_moment(k, k, m, 0);
}

double phi_l2_norm_sq_closed(int k, double lambda, int m) {
  double logb = std::lgamma(k + m) - std::lgamma(k + 1.0) - std::lgamma(m);
  return std::pow(lambda, m) * std::pow(2.0 * std::numbers::pi, m) * std::exp(logb);
}

double phi_moment(int k, int kp, double lambda, int m, int j) {
  if (k < 0 || kp < 0 || m < 1 || j < 0 || !(lambda > 0.0)) throw ValidationError("phi_moment: invalid parameters");
  return std::pow(lambda, m - j) * converged_moment(k, kp, m, j);
}

double hermite_residual(int k, double lambda, int m, double h) {
  if (!(h > 0.0)) throw ValidationError("hermite_residual: h must be positive");
  if (k < 0 || m < 1 || !(lambda > 0.0)) throw ValidationError("hermite_residual: invalid parameters");
  const int d = 2 * m;
  const double E = (2.0 * k + m) * lambda;
  std::vector<Eigen::VectorXd> dirs;
  dirs.push_back(Eigen::VectorXd::Unit(d, 0));
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) g(i) = 1.0 + 0.37 * i;
  dirs.push_back(g.normalized());
  double max_res = 0.0, max_ref = 0.0;
  const double L = 1.0 / std::sqrt(lambda);
  for (const auto& dir : dirs)
    for (int s = 0; s <= 24; ++s) {
      Eigen::VectorXd z = (0.25 * s * L) * dir;
      double f0 = phi(k, lambda, m, z);
      double lap = 0.0;
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        lap += (phi(k, lambda, m, zp) - 2.0 * f0 + phi(k, lambda, m, zm)) / (h * h);
      }
      double res = -lap + 0.25 * lambda * lambda * z.squaredNorm() * f0 - E * f0;
      max_res = std::max(max_res, std::abs(res));
      max_ref = std::max(max_ref, std::abs(E * f0));
    }
  return max_res / max_ref;
}

double subelliptic_ratio(int k, double lambda, int m, double beta) {
  if (!(beta >= 0.0)) throw ValidationError("subelliptic_ratio: beta must be nonnegative");
  if (k < 0 || m < 1 || !(lambda > 0.0)) throw ValidationError("subelliptic_ratio: invalid parameters");
  if (beta == 0.0) return 1.0;
  if (k > kLaguerreDegreeCap) throw ValidationError("Laguerre degree exceeds the cap of 512");
  // || |z|^beta phi ||^2 = lambda^{m-beta} 2^beta C int s^{m-1+beta} L^2 e^{-s}: use the weight
  // s^{m-1+beta} e^{-s} directly so the integrand stays polynomial for any beta.
  auto weighted = [&](double expo, int n) {
    const QuadRule& g = gauss_laguerre(n, m - 1.0 + expo);
    std::vector<double> seq(k + 1);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      laguerre_scaled_sequence(k, m - 1.0, g.x[i], 0.5 * g.logw[i], seq.data());
      s += seq[k] * seq[k];
    }
    return s;
  };
  auto ratio_sq = [&](int n) {
    // lambda cancels: ratio^2 = 2^beta E[s^beta] / (2k+m)^beta
    return std::pow(2.0, beta) * weighted(beta, n) / weighted(0.0, n) / std::pow(2.0 * k + m, beta);
  };
  int n = 64;
  while (n < k + static_cast<int>(std::ceil(beta)) + 2) n *= 2;
  double prev = ratio_sq(n);
  for (;;) {
    if (n * 2 > 1024) throw NumericalError("subelliptic_ratio: quadrature did not converge");
    n *= 2;
    double cur = ratio_sq(n);
    if (std::abs(cur - prev) <= 1e-11 * std::abs(cur)) return std::sqrt(cur);
    prev = cur;
  }
}

BandTable radial_moment_table(int r, int m, int kmax) {
  if (r < 1 || m < 0 || kmax < 0) throw ValidationError("radial_moment_table: invalid parameters");
  BandTable T;
  T.kmax = kmax;
  T.band = m;
  T.v.assign(static_cast<std::size_t>(kmax + 1) * (2 * m + 1), 0.0);
  int n = kmax + m + 8;
  const QuadRule& g = gauss_laguerre(n, r - 1.0);
  const double pref = std::pow(std::numbers::pi, r) / std::tgamma(r) * std::pow(2.0, r + m);
  std::vector<double> seq(kmax + 1);
  for (int i = 0; i < n; ++i) {
    laguerre_scaled_sequence(kmax, r - 1.0, g.x[i], 0.5 * g.logw[i], seq.data());
    const double xm = std::pow(g.x[i], m);
    for (int k = 0; k <= kmax; ++k) {
      if (seq[k] == 0.0) continue;
      for (int d = -m; d <= m; ++d) {
        int kp = k + d;
        if (kp < 0 || kp > kmax) continue;
        T.v[static_cast<std::size_t>(k) * (2 * m + 1) + (d + m)] += pref * xm * seq[k] * seq[kp];
      }
    }
  }
  return T;
}

}  // namespace metivier
