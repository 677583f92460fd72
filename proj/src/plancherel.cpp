#include "metivier/plancherel.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "metivier/errors.hpp"
#include "metivier/laguerre.hpp"
#include "metivier/quadrature.hpp"
#include "metivier/spectral.hpp"

namespace metivier {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sphere_area(int dim) { return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim); }

// Gram matrices of tau_k(t) = (-1)^k L_k^{r-1}(2t) e^{-t} and its t-derivative
// against t^{r-1} w(t) dt on (0, inf). Exact by Gauss-Laguerre in s = 2t.
struct Grams {
  Eigen::MatrixXd TT1, TTt, TDt, DDt, DDt2;
};

Grams make_grams(int r, int K) {
  const int n = K + 8;
  const QuadRule& g = gauss_laguerre(n, r - 1.0);
  const int m = K + 1;
  Grams G;
  G.TT1 = G.TTt = G.TDt = G.DDt = G.DDt2 = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> la(m), lb(m);
  Eigen::VectorXd tau(m), dtau(m);
  for (int i = 0; i < n; ++i) {
    const double s = g.x[i];
    // node weight for t^{r-1} dt with the e^{-s} absorbed into the sequences
    const double w = std::exp(g.logw[i] + s) * std::pow(0.5, r);
    laguerre_scaled_sequence(K, r - 1.0, s, -0.5 * s, la.data());
    laguerre_scaled_sequence(K, static_cast<double>(r), s, -0.5 * s, lb.data());
    for (int k = 0; k < m; ++k) {
      const double sg = (k % 2) ? -1.0 : 1.0;
      tau[k] = sg * la[k];
      dtau[k] = sg * (-(k > 0 ? 2.0 * lb[k - 1] : 0.0) - la[k]);
    }
    const double t = 0.5 * s;
    G.TT1.noalias() += w * tau * tau.transpose();
    G.TTt.noalias() += (w * t) * tau * tau.transpose();
    G.TDt.noalias() += (w * t) * tau * dtau.transpose();
    G.DDt.noalias() += (w * t) * dtau * dtau.transpose();
    G.DDt2.noalias() += (w * t * t) * dtau * dtau.transpose();
  }
  return G;
}

// Grams are shared by all mu nodes; grown on demand. Older, smaller tables
// stay alive since other threads may still hold references.
class GramCache {
 public:
  const Grams& get(int r, int K) {
    std::lock_guard<std::mutex> lk(mu_);
    auto& v = cache_[r];
    if (v.empty() || v.back()->TT1.rows() < K + 1) {
      const int have = v.empty() ? 8 : static_cast<int>(v.back()->TT1.rows());
      v.push_back(std::make_unique<Grams>(make_grams(r, std::max(K, 2 * have))));
    }
    return *v.back();
  }

 private:
  std::mutex mu_;
  std::vector<std::unique_ptr<Grams>> cache_[3];
};

enum class Fn { T, U, D };

// block of the Gram matrix for the pair of function types on one factor
Eigen::MatrixXd gram_block(const Grams& G, Fn a, Fn b, bool weighted_t, int m1, int m2) {
  // weighted_t: the sigma^2 part carries an extra t per factor
  auto pick = [&]() -> Eigen::MatrixXd {
    if (!weighted_t) {
      if (a == Fn::T && b == Fn::T) return G.TT1.topLeftCorner(m1, m2);
      if (a == Fn::T && b == Fn::U) return G.TDt.topLeftCorner(m1, m2);
      if (a == Fn::U && b == Fn::T) return G.TDt.topLeftCorner(m2, m1).transpose();
      return G.DDt2.topLeftCorner(m1, m2);
    }
    if (a == Fn::T && b == Fn::T) return G.TTt.topLeftCorner(m1, m2);
    if (a == Fn::T && b == Fn::D) return G.TDt.topLeftCorner(m1, m2);
    if (a == Fn::D && b == Fn::T) return G.TDt.topLeftCorner(m2, m1).transpose();
    return G.DDt.topLeftCorner(m1, m2);
  };
  return pick();
}

struct Term {
  Eigen::MatrixXd M;  // coefficients over (k1, k2)
  Fn f1, f2;
};

// sum_{j,j'} <M_j, G1(j,j') M_j' G2(j,j')^T>
double bilinear(const std::vector<Term>& terms, const Grams& G1, const Grams* G2, bool weighted_t) {
  double acc = 0.0;
  for (const Term& a : terms)
    for (const Term& b : terms) {
      const Eigen::MatrixXd g1 = gram_block(G1, a.f1, b.f1, weighted_t, a.M.rows(), b.M.rows());
      if (G2) {
        const Eigen::MatrixXd g2 = gram_block(*G2, a.f2, b.f2, weighted_t, a.M.cols(), b.M.cols());
        acc += (a.M.cwiseProduct(g1 * b.M * g2.transpose())).sum();
      } else {
        acc += (a.M.cwiseProduct(g1 * b.M)).sum();
      }
    }
  return acc;
}

// Spectral data at a unit direction and its two finite-difference neighbours.
struct Stencil {
  Eigen::Vector3d w;
  double weight = 0.0;
  SpectralDecomposition d0, dp, dm;
  double np = 1.0, nm = 1.0;  // |w +- h v|
  bool ok = true;
};

Stencil make_stencil(const Eigen::Matrix3d& A, const Eigen::Vector3d& w, double weight, const Eigen::Vector3d& v,
                     double h, int alpha) {
  Stencil s;
  s.w = w;
  s.weight = weight;
  s.d0 = metivier43_decompose(A, w);
  if (alpha > 0) {
    const Eigen::Vector3d wp = w + h * v, wm = w - h * v;
    s.dp = metivier43_decompose(A, wp);
    s.dm = metivier43_decompose(A, wm);
    s.np = wp.norm();
    s.nm = wm.norm();
    s.ok = s.dp.N == s.d0.N && s.dm.N == s.d0.N;
  }
  return s;
}

double ground(const SpectralDecomposition& d) {
  double g = 0.0;
  for (int n = 0; n < d.N; ++n) g += d.r[n] * d.b[n];
  return g;
}

double chi_at(int ell, double rho) { return dyadic_chi_value(0, std::ldexp(rho, ell)); }

// Coefficients F(rho lambda_k(dec)) chi(2^ell rho nrm) on the box ext1 x ext2.
Eigen::MatrixXd coeffs(const SampledMultiplier& F, const SpectralDecomposition& d, double rho, double nrm, int ell,
                       int e1, int e2) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(e1, e2);
  const double chi = chi_at(ell, rho * nrm);
  if (chi == 0.0) return C;
  for (int k1 = 0; k1 < e1; ++k1)
    for (int k2 = 0; k2 < e2; ++k2) {
      double lam = (2.0 * k1 + d.r[0]) * d.b[0];
      if (d.N == 2) lam += (2.0 * k2 + d.r[1]) * d.b[1];
      C(k1, k2) = F.real_at(rho * lam) * chi;
    }
  return C;
}

struct NodeOut {
  double value = 0.0;
  long terms = 0;
};

// int |d_v^alpha V(xi, rho w)|^2 dxi
NodeOut density(const Stencil& st, const SampledMultiplier& F, double f_hi, int ell, int alpha, double rho, double h,
                GramCache& cache) {
  const SpectralDecomposition& d = st.d0;
  const int N = d.N;
  int ext[2] = {1, 1};
  for (int n = 0; n < N; ++n) {
    double bmin = d.b[n];
    if (alpha > 0) bmin = std::min({bmin, st.dp.b[n], st.dm.b[n]});
    double others = 0.0;
    for (int m = 0; m < N; ++m)
      if (m != n) others += d.r[m] * std::min(d.b[m], alpha > 0 ? std::min(st.dp.b[m], st.dm.b[m]) : d.b[m]);
    const double room = f_hi / rho - others - d.r[n] * bmin;
    ext[n] = room < 0.0 ? 0 : static_cast<int>(std::floor(room / (2.0 * bmin))) + 1;
  }
  NodeOut out;
  if (ext[0] == 0 || ext[1] == 0) return out;
  const Grams& G1 = cache.get(d.r[0], ext[0]);
  const Grams* G2 = N == 2 ? &cache.get(d.r[1], ext[1]) : nullptr;

  double pf = 1.0;
  for (int n = 0; n < N; ++n) {
    const double beta = rho * d.b[n];
    pf *= std::pow(4.0 * kPi, 2.0 * d.r[n]) * std::pow(beta, d.r[n]) * std::pow(kPi, d.r[n]) / std::tgamma(d.r[n]);
  }
  const Eigen::MatrixXd C = coeffs(F, d, rho, 1.0, ell, ext[0], ext[1]);
  out.terms = static_cast<long>((C.array() != 0.0).count());
  if (alpha == 0) {
    out.value = pf * bilinear({{C, Fn::T, Fn::T}}, G1, G2, false);
    return out;
  }
  const double step = h * rho;  // |mu| h
  const Eigen::MatrixXd Cp = coeffs(F, st.dp, rho, st.np, ell, ext[0], ext[1]);
  const Eigen::MatrixXd Cm = coeffs(F, st.dm, rho, st.nm, ell, ext[0], ext[1]);
  out.terms = std::max<long>(out.terms, (Cp.array() != 0.0).count());
  const Eigen::MatrixXd dC = (Cp - Cm) / (2.0 * step);
  std::vector<Term> A{{dC, Fn::T, Fn::T}};
  for (int n = 0; n < N; ++n) {
    // d_v beta_n / beta_n
    const double g = (st.dp.b[n] - st.dm.b[n]) / (2.0 * h * d.b[n]) / rho;
    if (n == 0) A.push_back({-g * C, Fn::U, Fn::T});
    else A.push_back({-g * C, Fn::T, Fn::U});
  }
  out.value = pf * bilinear(A, G1, G2, false);
  if (N == 2) {
    const Eigen::MatrixXd D = (st.dp.P[0] - st.dm.P[0]) / (2.0 * step);
    const double kappa = (d.P[0] * D * d.P[1]).squaredNorm() / (d.r[0] * d.r[1]);
    const double b1 = rho * d.b[0], b2 = rho * d.b[1];
    std::vector<Term> B{{C / b1, Fn::D, Fn::T}, {-C / b2, Fn::T, Fn::D}};
    out.value += kappa * b1 * b2 * pf * bilinear(B, G1, G2, true);
  }
  return out;
}

void check_second_layer_args(const SampledMultiplier& F, int alpha, double fd_step) {
  if (alpha != 0 && alpha != 1) throw ValidationError("second layer: alpha must be 0 or 1");
  if (!(fd_step > 0.0 && fd_step < 0.1)) throw ValidationError("second layer: fd_step must lie in (0, 0.1)");
  if (F.nonzero_hull().second <= 0.0 && !F.is_zero())
    throw ValidationError("second layer: F must have support in (0, inf)");
}

}  // namespace

std::pair<double, double> fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ValidationError("fit_slope: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_slope: abscissae are all equal");
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (my + slope * (xs[i] - mx));
    rss += e * e;
  }
  return {slope, std::sqrt(rss / n)};
}

namespace {

void finish_report(ScanReport& rep) {
  std::vector<double> xs, ys;
  bool zero = false;
  for (const ScanRow& r : rep.rows) {
    xs.push_back(r.ell);
    if (!(r.mass > 0.0)) zero = true;
    ys.push_back(r.mass > 0.0 ? std::log2(r.mass) : 0.0);
    if (r.rhs_model > 0.0) rep.implied_constant = std::max(rep.implied_constant, r.mass / r.rhs_model);
    rep.max_quad_error = std::max(rep.max_quad_error, r.quad_error_est);
  }
  if (zero || xs.size() < 2) {
    rep.fitted_slope = rep.residual = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  std::tie(rep.fitted_slope, rep.residual) = fit_slope(xs, ys);
}

void check_range(std::pair<int, int> r) {
  if (r.first > r.second) throw ValidationError("scan: empty ell range");
}

}  // namespace

std::vector<ScanReport> first_layer_scan(const GroupSpec& spec, const SampledMultiplier& F,
                                         const std::vector<int>& alphas, std::pair<int, int> ell_range,
                                         const QuadratureSpec& quad, const ParallelFor& pfor) {
  check_range(ell_range);
  if (alphas.empty()) throw ValidationError("first_layer_scan: no alpha given");
  const double nf = l2_norm(F);
  std::vector<ScanReport> out;
  for (int alpha : alphas) {
    ScanReport rep;
    rep.alpha = alpha;
    rep.slope_target = 2.0 * alpha - spec.d2;
    for (int ell = ell_range.first; ell <= ell_range.second; ++ell) {
      const MassResult m = weighted_l2_mass_first_layer(spec, F, ell, alpha, quad, pfor);
      rep.rows.push_back({ell, alpha, m.value, std::exp2(ell * rep.slope_target) * nf * nf, m.quad_error_est});
    }
    finish_report(rep);
    out.push_back(std::move(rep));
  }
  return out;
}

double second_layer_density_43(const Eigen::Matrix3d& A, const SampledMultiplier& F, int ell, int alpha,
                               const Eigen::Vector3d& mu, double fd_step) {
  check_second_layer_args(F, alpha, fd_step);
  const double rho = mu.norm();
  if (!(rho > 0.0)) throw ValidationError("second layer: mu must be nonzero");
  if (F.is_zero()) return 0.0;
  const Eigen::Vector3d v = kerA_classify(A).v;
  const Stencil st = make_stencil(A, mu / rho, 1.0, v, fd_step, alpha);
  if (!st.ok) throw NumericalError("second layer: eigenvalue multiplicity changes across the difference stencil");
  GramCache cache;
  return density(st, F, F.nonzero_hull().second, ell, alpha, rho, fd_step, cache).value;
}

SecondLayerResult second_layer_mass_43(const Eigen::Matrix3d& A, const SampledMultiplier& F, int ell, int alpha,
                                       double fd_step, const QuadratureSpec& quad, const ParallelFor& pfor) {
  check_second_layer_args(F, alpha, fd_step);
  validate(quad);
  SecondLayerResult res;
  if (F.is_zero()) return res;
  const GroupSpec spec = metivier_4_3(A);
  const Eigen::Vector3d v = kerA_classify(A).v;
  const double f_hi = F.nonzero_hull().second;
  GramCache cache;
  const double pref = std::pow(kTwoPi, -(spec.d2 + 2.0 * spec.d1));
  double vals[2] = {0.0, 0.0};
  for (int pass = 0; pass < 2; ++pass) {
    const int nr = pass == 0 ? quad.radial_nodes : quad.radial_nodes / 2;
    const int na = pass == 0 ? quad.angular_nodes : std::max(2, quad.angular_nodes / 2);
    const SphereRule sr = sphere_rule(3, na);
    std::vector<double> per(sr.points.size(), 0.0);
    std::vector<long> terms(sr.points.size(), 0);
    std::vector<int> skipped(sr.points.size(), 0);
    pfor(sr.points.size(), [&](std::size_t di) {
      const Stencil st = make_stencil(A, Eigen::Vector3d(sr.points[di]), sr.w[di], v, fd_step, alpha);
      if (!st.ok) {
        skipped[di] = 1;
        return;
      }
      const double top = f_hi / ground(st.d0);
      const double lo = std::ldexp(0.5, -ell), mid = std::ldexp(1.0, -ell), hi = std::ldexp(2.0, -ell);
      for (auto [a, b] : {std::pair{lo, mid}, {mid, hi}}) {
        if (a >= top) continue;
        const QuadRule g = gauss_legendre(nr, a, b);
        for (int i = 0; i < nr; ++i) {
          const double rho = g.x[i];
          const NodeOut o = density(st, F, f_hi, ell, alpha, rho, fd_step, cache);
          per[di] += st.weight * g.w[i] * rho * rho * o.value;
          terms[di] = std::max(terms[di], o.terms);
        }
      }
    });
    vals[pass] = pref * tree_sum(per);
    if (pass == 0) {
      for (long t : terms) res.k_terms = std::max(res.k_terms, t);
      for (int s : skipped) res.skipped += s;
    }
  }
  res.mass = vals[0];
  res.quad_error_est = vals[0] != 0.0 ? std::abs(vals[0] - vals[1]) / std::abs(vals[0]) : std::abs(vals[1]);
  return res;
}

ScanReport second_layer_scan_43(const Eigen::Matrix3d& A, const SampledMultiplier& F, int alpha,
                                std::pair<int, int> ell_range, const QuadratureSpec& quad, double fd_step,
                                const ParallelFor& pfor) {
  check_range(ell_range);
  ScanReport rep;
  rep.alpha = alpha;
  rep.slope_target = 2.0 * alpha - 3.0;
  const double nf = F.is_zero() ? 0.0 : sobolev_norm(F, alpha, false).value;
  for (int ell = ell_range.first; ell <= ell_range.second; ++ell) {
    const SecondLayerResult a = second_layer_mass_43(A, F, ell, alpha, fd_step, quad, pfor);
    double change = 0.0;
    if (alpha > 0) {
      const SecondLayerResult b = second_layer_mass_43(A, F, ell, alpha, 0.5 * fd_step, quad, pfor);
      change = b.mass != 0.0 ? std::abs(a.mass - b.mass) / std::abs(b.mass) : std::abs(a.mass);
    }
    rep.fd_change = std::max(rep.fd_change, change);
    rep.rows.push_back({ell, alpha, a.mass, std::exp2(ell * rep.slope_target) * nf * nf, a.quad_error_est});
  }
  rep.fd_unstable = rep.fd_change > 0.05;
  finish_report(rep);
  return rep;
}

std::vector<GaussianTrial> default_gaussian_trials() {
  std::vector<GaussianTrial> out;
  for (double s = 0.5; s <= 4.0; s *= 2.0)
    for (double tau = 0.5; tau <= 32.0; tau *= 2.0) out.push_back({s, tau});
  return out;
}

double gaussian_trial_lp(int d1, int d2, const GaussianTrial& g, double p) {
  if (!(p >= 1.0)) throw ValidationError("gaussian trial: p must be >= 1");
  const double lx = 0.5 * d1 * std::log(kTwoPi * g.s * g.s / p);
  const double lu = 0.5 * d2 * std::log(kTwoPi * g.tau * g.tau / p);
  return std::exp((lx + lu) / p);
}

std::pair<double, double> gaussian_trial_norm(const GroupSpec& spec, const SampledMultiplier& F, int ell,
                                              const GaussianTrial& g, const QuadratureSpec& quad) {
  validate(quad);
  if (!(g.s > 0.0 && g.tau > 0.0)) throw ValidationError("gaussian trial: widths must be > 0");
  if (!is_heisenberg_type(spec, 1e-10)) throw ValidationError("restriction probe: group must be of Heisenberg type");
  if (F.is_zero()) return {0.0, 0.0};
  Eigen::VectorXd e = Eigen::VectorXd::Zero(spec.d2);
  e[0] = 1.0;
  const SpectralDecomposition dec = decompose_j(spec, e);
  if (dec.N != 1 || dec.r0 != 0) throw ValidationError("restriction probe: group must be of Heisenberg type");
  const double b = dec.b[0];
  const int r = dec.r[0];
  const double f_hi = F.nonzero_hull().second;
  auto node = [&](double rho) {
    const double beta = b * rho;
    const double p = 0.5 + 1.0 / (beta * g.s * g.s);
    const double y = std::pow((p - 1.0) / p, 2.0);
    // |<f_x, phi_k>|^2 / ||phi_k||^2 = (2 pi / beta)^r binom(k+r-1, k) y^k p^{-2r}
    double c = std::pow(kTwoPi / beta, r) * std::pow(p, -2.0 * r);
    double sum = 0.0;
    for (int k = 0; (2.0 * k + r) * beta <= f_hi; ++k) {
      if (k > 0) c *= y * (k + r - 1.0) / k;
      sum += std::norm(F((2.0 * k + r) * beta)) * c;
    }
    const double ghat2 = std::pow(kTwoPi * g.tau * g.tau, spec.d2) * std::exp(-g.tau * g.tau * rho * rho);
    const double chi = chi_at(ell, rho);
    return std::pow(rho, spec.d2 - 1) * ghat2 * chi * chi * sum;
  };
  const double pref = std::pow(kTwoPi, -spec.d2) * sphere_area(spec.d2);
  double vals[2] = {0.0, 0.0};
  for (int pass = 0; pass < 2; ++pass) {
    const int nr = pass == 0 ? quad.radial_nodes : quad.radial_nodes / 2;
    double acc = 0.0;
    const double lo = std::ldexp(0.5, -ell), mid = std::ldexp(1.0, -ell), hi = std::ldexp(2.0, -ell);
    for (auto [a, c] : {std::pair{lo, mid}, {mid, hi}}) {
      const QuadRule q = gauss_legendre(nr, a, c);
      for (int i = 0; i < nr; ++i) acc += q.w[i] * node(q.x[i]);
    }
    vals[pass] = std::sqrt(std::max(0.0, pref * acc));
  }
  const double err = vals[0] != 0.0 ? std::abs(vals[0] - vals[1]) / vals[0] : vals[1];
  return {vals[0], err};
}

std::vector<RestrictionRow> restriction_scaling_probe(const GroupSpec& spec, const SampledMultiplier& F,
                                                      const Rational& p, std::pair<int, int> ell_range,
                                                      const std::vector<GaussianTrial>& trials,
                                                      const QuadratureSpec& quad) {
  check_range(ell_range);
  if (trials.empty()) throw ValidationError("restriction probe: no trial functions");
  if (p < Rational(1) || p > Rational(2)) throw ValidationError("restriction probe: p must lie in [1, 2]");
  const double pd = p.to_double();
  // theta_p only exists up to the Stein-Tomas exponent; beyond it only the lower bound is reported
  const Rational pmin = std::min(stein_tomas(spec.d1), stein_tomas(spec.d2));
  const double theta = p <= pmin ? theta_p(p, spec.d1, spec.d2).to_double() : std::numeric_limits<double>::quiet_NaN();
  const double n2 = l2_norm(F);
  std::vector<RestrictionRow> out;
  for (int ell = ell_range.first; ell <= ell_range.second; ++ell) {
    RestrictionRow row;
    row.ell = ell;
    for (const GaussianTrial& g : trials) {
      const auto [nrm, err] = gaussian_trial_norm(spec, F, ell, g, quad);
      const double ratio = nrm / gaussian_trial_lp(spec.d1, spec.d2, g, pd);
      if (&g == &trials.front() || ratio > row.lower_bound) {
        row.lower_bound = ratio;
        row.best = g;
        row.quad_error_est = err;
      }
    }
    const double cs = F.is_zero() ? 0.0 : cowling_sikora_norm(F, std::ldexp(1.0, ell));
    row.rhs = std::exp2(-ell * spec.d2 * (1.0 / pd - 0.5)) * std::pow(n2, 1.0 - theta) * std::pow(cs, theta);
    row.ratio = row.rhs > 0.0 ? row.lower_bound / row.rhs : (std::isnan(row.rhs) ? row.rhs : 0.0);
    row.flagged = row.quad_error_est > quad.max_rel_error;
    out.push_back(row);
  }
  return out;
}

}  // namespace metivier
