#include "metivier/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "metivier/errors.hpp"
#include "metivier/laguerre.hpp"
#include "metivier/quadrature.hpp"

namespace metivier {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Direction {
  Eigen::VectorXd omega;
  double w = 0.0;
  SpectralDecomposition dec;
  double ground = 0.0;  // sum_n r_n b_n at |mu| = 1
};

std::vector<Direction> directions(const GroupSpec& spec, int angular_nodes) {
  SphereRule rule = sphere_rule(spec.d2, angular_nodes);
  std::vector<Direction> out;
  out.reserve(rule.points.size());
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    Direction d;
    d.omega = rule.points[i];
    d.w = rule.w[i];
    d.dec = decompose_j(spec, d.omega);
    if (d.dec.r0 > 0) throw ValidationError("kernel: J_mu is singular at a quadrature direction (not a Metivier group)");
    for (int n = 0; n < d.dec.N; ++n) d.ground += d.dec.r[n] * d.dec.b[n];
    out.push_back(std::move(d));
  }
  return out;
}

struct Interval {
  double a, b;
};

std::vector<Interval> radial_intervals(std::optional<int> ell, double f_hi, double ground, int tail_octaves) {
  std::vector<Interval> out;
  const double top = f_hi / ground;
  if (ell) {
    const double lo = std::ldexp(0.5, -*ell), mid = std::ldexp(1.0, -*ell), hi = std::ldexp(2.0, -*ell);
    if (lo < top) out.push_back({lo, std::min(mid, top)});
    if (mid < top) out.push_back({mid, std::min(hi, top)});
    return out;
  }
  int j = static_cast<int>(std::floor(std::log2(f_hi))) - tail_octaves;
  for (; std::ldexp(1.0, j) < top; ++j) out.push_back({std::ldexp(1.0, j), std::min(std::ldexp(1.0, j + 1), top)});
  return out;
}

double rho_min_none(double f_hi, int tail_octaves) {
  return std::ldexp(1.0, static_cast<int>(std::floor(std::log2(f_hi))) - tail_octaves);
}

// Subsample every other node: same function on a grid twice as coarse.
SampledMultiplier coarsen(const SampledMultiplier& F) {
  SampledMultiplier G = F;
  G.grid.step = 2.0 * F.grid.step;
  G.grid.n = F.grid.n / 2;
  G.values.resize(G.grid.n);
  for (std::size_t i = 0; i < G.grid.n; ++i) G.values[i] = F.values[2 * i];
  return G;
}

struct Support {
  double lo, hi;
};

Support support_of(const SampledMultiplier& F, const QuadratureSpec& q) {
  auto [lo, hi] = F.nonzero_hull();
  if (F.is_zero()) return {0.0, 0.0};
  lo = std::max(lo, 0.0);
  if (q.k_energy_cap > 0.0) {
    if (q.k_energy_cap < hi) throw ValidationError("quadrature: k_energy_cap below the support of F");
    hi = q.k_energy_cap;
  }
  return {lo, hi};
}

// For each block, phi_k^{(rho b_n, r_n)} at |y_n|^2 = s_n for k = 0..kmax_n.
struct BlockSeqs {
  std::vector<std::vector<double>> seq;
};

void block_sequences(const SpectralDecomposition& dec, double rho, const std::vector<double>& s, double f_hi,
                     int k_cap, BlockSeqs& out) {
  out.seq.resize(dec.N);
  double ground = 0.0;
  for (int n = 0; n < dec.N; ++n) ground += dec.r[n] * dec.b[n];
  for (int n = 0; n < dec.N; ++n) {
    const double kmx = std::floor((f_hi / rho - ground) / (2.0 * dec.b[n]));
    if (kmx < 0) {
      out.seq[n].clear();
      continue;
    }
    if (kmx > k_cap)
      throw NumericalError("kernel: Laguerre degree " + std::to_string(static_cast<long>(kmx)) + " exceeds cap " +
                           std::to_string(k_cap) + " (raise k_max or use a coarser ell)");
    const int km = static_cast<int>(kmx);
    const double lam = rho * dec.b[n];
    const double t = 0.5 * lam * s[n];
    out.seq[n].resize(km + 1);
    laguerre_scaled_sequence(km, dec.r[n] - 1.0, t, dec.r[n] * std::log(lam) - 0.5 * t, out.seq[n].data());
  }
}

// Visits every k with rho * lambda_k in [f_lo, f_hi]:
// visit(k, energy) with energy = sum (2 k_n + r_n) b_n.
template <class Visit>
void for_each_k(const SpectralDecomposition& dec, double rho, double f_lo, double f_hi, std::vector<int>& k,
                Visit&& visit) {
  k.assign(dec.N, 0);
  double base = 0.0;
  for (int n = 0; n < dec.N; ++n) base += dec.r[n] * dec.b[n];
  const double emax = f_hi / rho, emin = f_lo / rho;
  std::function<void(int, double)> rec = [&](int n, double e) {
    if (n == dec.N) {
      if (e >= emin) visit(k, e);
      return;
    }
    for (k[n] = 0;; ++k[n]) {
      const double en = e + 2.0 * k[n] * dec.b[n];
      if (en > emax) break;
      rec(n + 1, en);
    }
    k[n] = 0;
  };
  if (base <= emax) rec(0, base);
}

double chi_factor(std::optional<int> ell, double rho) { return ell ? dyadic_chi_value(0, std::ldexp(rho, *ell)) : 1.0; }

// int_{|mu| < rho} e^{i <mu, u>} dmu on R^{d2}
double ball_transform(int d2, double rho, double un) {
  const double nu = 0.5 * d2;
  if (un * rho < 1e-8) return std::pow(std::numbers::pi, nu) * std::pow(rho, d2) / std::tgamma(nu + 1.0);
  return std::pow(kTwoPi * rho / un, nu) * std::cyl_bessel_j(nu, rho * un);
}

struct BatchAcc {
  std::vector<std::complex<double>> v, v2;  // per u: with F, with coarsened F
  long k_terms = 0;
};

BatchAcc integrate_batch(const GroupSpec& spec, const SampledMultiplier& F, const SampledMultiplier* F2,
                         std::optional<int> ell, const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& us,
                         const QuadratureSpec& q, bool coarse, Support sup, const ParallelFor& pfor) {
  const int angular_nodes = coarse ? std::max(2, q.angular_nodes / 2) : q.angular_nodes;
  auto dirs = directions(spec, angular_nodes);
  double umax = 0.0;
  for (auto& u : us) umax = std::max(umax, u.norm());
  const std::size_t nu = us.size();
  std::vector<BatchAcc> per(dirs.size());
  pfor(dirs.size(), [&](std::size_t di) {
    const Direction& d = dirs[di];
    BatchAcc& acc = per[di];
    acc.v.assign(nu, 0.0);
    acc.v2.assign(nu, 0.0);
    std::vector<double> s(d.dec.N);
    for (int n = 0; n < d.dec.N; ++n) s[n] = x.dot(d.dec.P[n] * x);
    std::vector<double> proj(nu);
    for (std::size_t j = 0; j < nu; ++j) proj[j] = d.omega.dot(us[j]);
    BlockSeqs bs;
    std::vector<int> k;
    for (const Interval& I : radial_intervals(ell, sup.hi, d.ground, q.tail_octaves)) {
      int nr = std::max(q.radial_nodes, 8 * static_cast<int>(std::ceil(umax * (I.b - I.a))));
      if (coarse) nr /= 2;
      QuadRule g = gauss_legendre(nr, I.a, I.b);
      for (int i = 0; i < nr; ++i) {
        const double rho = g.x[i];
        const double chi = chi_factor(ell, rho);
        if (chi == 0.0) continue;
        block_sequences(d.dec, rho, s, sup.hi, q.k_max, bs);
        std::complex<double> S = 0.0, S2 = 0.0;
        long terms = 0;
        for_each_k(d.dec, rho, sup.lo, sup.hi, k, [&](const std::vector<int>& kk, double e) {
          double prod = 1.0;
          for (int n = 0; n < d.dec.N; ++n) prod *= bs.seq[n][kk[n]];
          S += F(rho * e) * prod;
          if (F2) S2 += (*F2)(rho * e) * prod;
          ++terms;
        });
        acc.k_terms = std::max(acc.k_terms, terms);
        const double wt = d.w * g.w[i] * std::pow(rho, spec.d2 - 1) * chi;
        for (std::size_t j = 0; j < nu; ++j) {
          const std::complex<double> ph = std::polar(wt, rho * proj[j]);
          acc.v[j] += S * ph;
          acc.v2[j] += S2 * ph;
        }
      }
    }
  });
  BatchAcc out;
  out.v.assign(nu, 0.0);
  out.v2.assign(nu, 0.0);
  std::vector<std::complex<double>> col(dirs.size());
  for (std::size_t j = 0; j < nu; ++j) {
    for (std::size_t di = 0; di < dirs.size(); ++di) col[di] = per[di].v[j];
    out.v[j] = tree_sum(col);
    for (std::size_t di = 0; di < dirs.size(); ++di) col[di] = per[di].v2[j];
    out.v2[j] = tree_sum(col);
  }
  for (auto& p : per) out.k_terms = std::max(out.k_terms, p.k_terms);
  return out;
}

std::vector<std::vector<int>> compositions(int alpha, int N) {
  std::vector<std::vector<int>> out;
  std::vector<int> m(N, 0);
  std::function<void(int, int)> rec = [&](int n, int left) {
    if (n == N - 1) {
      m[n] = left;
      out.push_back(m);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      m[n] = v;
      rec(n + 1, left - v);
    }
  };
  rec(0, alpha);
  return out;
}

double multinomial(int alpha, const std::vector<int>& m) {
  double v = std::lgamma(alpha + 1.0);
  for (int x : m) v -= std::lgamma(x + 1.0);
  return std::round(std::exp(v));
}

// Shared mu-side driver for the first-layer masses. node(d, rho, chi) returns
// the x-integrated |K^(x, mu)|^2 without the (2 pi) prefactors.
template <class NodeFn>
MassResult mass_driver(const GroupSpec& spec, const SampledMultiplier& F, int ell, const QuadratureSpec& q,
                       const ParallelFor& pfor, NodeFn&& node) {
  validate(q);
  MassResult res;
  if (F.is_zero()) return res;
  const Support sup = support_of(F, q);
  const double pref = std::pow(kTwoPi, -(spec.d2 + spec.d1));
  double vals[2] = {0.0, 0.0};
  for (int pass = 0; pass < 2; ++pass) {
    const int nr = pass == 0 ? q.radial_nodes : q.radial_nodes / 2;
    const int na = pass == 0 ? q.angular_nodes : std::max(2, q.angular_nodes / 2);
    auto dirs = directions(spec, na);
    std::vector<double> per(dirs.size(), 0.0);
    std::vector<long> terms(dirs.size(), 0);
    pfor(dirs.size(), [&](std::size_t di) {
      const Direction& d = dirs[di];
      for (const Interval& I : radial_intervals(ell, sup.hi, d.ground, q.tail_octaves)) {
        QuadRule g = gauss_legendre(nr, I.a, I.b);
        for (int i = 0; i < nr; ++i) {
          const double rho = g.x[i];
          const double chi = chi_factor(ell, rho);
          if (chi == 0.0) continue;
          long t = 0;
          const double v = node(d.dec, rho, chi, sup, t);
          terms[di] = std::max(terms[di], t);
          per[di] += d.w * g.w[i] * std::pow(rho, spec.d2 - 1) * v;
        }
      }
    });
    vals[pass] = pref * tree_sum(per);
    if (pass == 0)
      for (long t : terms) res.k_terms = std::max(res.k_terms, t);
  }
  res.value = vals[0];
  res.quad_error_est = vals[0] != 0.0 ? std::abs(vals[0] - vals[1]) / std::abs(vals[0]) : std::abs(vals[1]);
  return res;
}

}  // namespace

void validate(const QuadratureSpec& q) {
  if (q.radial_nodes < 2 || q.angular_nodes < 2 || q.x_radial_nodes < 2)
    throw ValidationError("quadrature: node counts must be >= 2");
  if (q.radial_nodes % 2 || q.angular_nodes % 2) throw ValidationError("quadrature: node counts must be even");
  if (q.k_energy_cap < 0.0) throw ValidationError("quadrature: k_energy_cap must be >= 0 (0 = auto)");
  if (q.k_max < 1) throw ValidationError("quadrature: k_max must be >= 1");
  if (!(q.max_rel_error > 0.0)) throw ValidationError("quadrature: max_rel_error must be > 0");
  if (q.abs_tol < 0.0) throw ValidationError("quadrature: abs_tol must be >= 0");
  if (q.tail_octaves < 1) throw ValidationError("quadrature: tail_octaves must be >= 1");
}

double eigenvalue_lambda(const SpectralDecomposition& dec, const std::vector<int>& k) {
  if (static_cast<int>(k.size()) != dec.N)
    throw ValidationError("eigenvalue_lambda: multi-index length " + std::to_string(k.size()) + " != N = " +
                          std::to_string(dec.N));
  double s = 0.0;
  for (int n = 0; n < dec.N; ++n) {
    if (k[n] < 0) throw ValidationError("eigenvalue_lambda: negative index");
    s += (2.0 * k[n] + dec.r[n]) * dec.b[n];
  }
  return s;
}

std::vector<std::vector<int>> enumerate_k(const SpectralDecomposition& dec, double cap) {
  if (!(cap > 0.0)) throw ValidationError("enumerate_k: cap must be > 0");
  std::vector<std::vector<int>> out;
  std::vector<int> k;
  for_each_k(dec, 1.0, 0.0, cap, k, [&](const std::vector<int>& kk, double) { out.push_back(kk); });
  return out;
}

std::optional<Ell0Result> ell0(const GroupSpec& spec, std::pair<double, double> f_support,
                               std::pair<double, double> chi_support, int samples, std::uint64_t seed) {
  if (!(f_support.first < f_support.second) || !(chi_support.first < chi_support.second))
    throw ValidationError("ell0: supports must be nonempty intervals");
  if (!(chi_support.first > 0.0)) throw ValidationError("ell0: chi support must lie in (0, inf)");
  if (!(f_support.second > 0.0)) return std::nullopt;
  double gmin = INFINITY;
  for (const auto& w : sphere_samples(spec.d2, samples, seed)) {
    auto dec = decompose_j(spec, w);
    double g = 0.0;
    for (int n = 0; n < dec.N; ++n) g += dec.r[n] * dec.b[n];
    gmin = std::min(gmin, g);
  }
  if (!(gmin > 0.0)) return std::nullopt;
  // need some |mu| with 2^ell |mu| >= c_lo and gmin |mu| <= f_hi
  Ell0Result r;
  r.ground_min = gmin;
  r.ell_min = static_cast<int>(std::ceil(std::log2(chi_support.first * gmin / f_support.second) - 1e-12));
  r.ell0 = -r.ell_min;
  return r;
}

std::vector<KernelResult> eval_kernel_u_batch(const GroupSpec& spec, const SampledMultiplier& F,
                                              std::optional<int> ell, const Eigen::VectorXd& x,
                                              const std::vector<Eigen::VectorXd>& us, const QuadratureSpec& q,
                                              const ParallelFor& pfor) {
  validate(q);
  if (x.size() != spec.d1) throw ValidationError("eval_kernel: x has wrong dimension");
  for (auto& u : us)
    if (u.size() != spec.d2) throw ValidationError("eval_kernel: u has wrong dimension");
  std::vector<KernelResult> out(us.size());
  if (F.is_zero()) return out;
  const Support sup = support_of(F, q);
  if (!ell && !(sup.lo > 0.0))
    throw ValidationError("eval_kernel: supp F touches 0; the k-sum needs a chi cutoff (give ell)");
  const double pref = std::pow(kTwoPi, -spec.d2 - 0.5 * spec.d1);
  const SampledMultiplier F2 = coarsen(F);
  BatchAcc fine = integrate_batch(spec, F, &F2, ell, x, us, q, false, sup, pfor);
  BatchAcc coarse = integrate_batch(spec, F, nullptr, ell, x, us, q, true, sup, pfor);
  double kE = 0.0, rmin = 0.0;
  if (!ell) {
    kE = euclidean_kernel(F, spec.d1, x.norm());
    rmin = rho_min_none(sup.hi, q.tail_octaves);
  }
  for (std::size_t j = 0; j < us.size(); ++j) {
    std::complex<double> tail = 0.0;
    if (!ell) tail = std::pow(kTwoPi, -spec.d2) * kE * ball_transform(spec.d2, rmin, us[j].norm());
    KernelResult& r = out[j];
    r.value = pref * fine.v[j] + tail;
    const double dq = std::abs(pref * (fine.v[j] - coarse.v[j]));
    const double df = std::abs(pref * (fine.v[j] - fine.v2[j]));
    r.abs_error_est = std::max(dq, df);
    r.quad_error_est = std::abs(r.value) > 0.0 ? r.abs_error_est / std::abs(r.value) : (r.abs_error_est > 0 ? INFINITY : 0.0);
    r.k_terms = fine.k_terms;
    if (r.quad_error_est > q.max_rel_error && r.abs_error_est > q.abs_tol)
      throw NumericalError("eval_kernel: estimated relative error " + std::to_string(r.quad_error_est) +
                           " exceeds " + std::to_string(q.max_rel_error));
  }
  return out;
}

KernelResult eval_kernel(const GroupSpec& spec, const SampledMultiplier& F, std::optional<int> ell, const Point& p,
                         const QuadratureSpec& quad, const ParallelFor& pfor) {
  check_point(spec, p);
  return eval_kernel_u_batch(spec, F, ell, p.x, {p.u}, quad, pfor)[0];
}

double euclidean_kernel(const SampledMultiplier& F, int d1, double rx, int nodes) {
  auto [lo, hi] = F.nonzero_hull();
  lo = std::max(lo, 0.0);
  if (F.is_zero() || hi <= 0.0) return 0.0;
  const double nu = 0.5 * d1 - 1.0;
  QuadRule g = gauss_legendre(nodes, std::sqrt(lo), std::sqrt(hi));
  double s = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double t = g.x[i];
    const double z = t * rx;
    double radial;
    if (z < 1e-8) radial = std::pow(t, 2.0 * nu + 1.0) / (std::pow(2.0, nu) * std::tgamma(nu + 1.0));
    else radial = std::pow(rx, -nu) * std::cyl_bessel_j(nu, z) * std::pow(t, nu + 1.0);
    s += g.w[i] * F.real_at(t * t) * radial;
  }
  return std::pow(kTwoPi, -0.5 * d1) * s;
}

MassResult weighted_l2_mass_first_layer(const GroupSpec& spec, const SampledMultiplier& F, int ell, int alpha,
                                        const QuadratureSpec& q, const ParallelFor& pfor) {
  if (alpha < 0) throw ValidationError("weighted mass: alpha must be >= 0");
  validate(q);
  if (F.is_zero()) return {};
  const Support sup = support_of(F, q);
  // Degree bound over both angular rules, then one table per (r, m).
  int kmax = 0, rmax = 0;
  for (int na : {q.angular_nodes, std::max(2, q.angular_nodes / 2)})
    for (const auto& d : directions(spec, na))
      for (int n = 0; n < d.dec.N; ++n) {
        rmax = std::max(rmax, d.dec.r[n]);
        const double rho_lo = std::ldexp(0.5, -ell);
        const double km = std::floor((sup.hi / rho_lo - d.ground) / (2.0 * d.dec.b[n]));
        if (km > q.k_max) throw NumericalError("weighted mass: Laguerre degree exceeds k_max");
        kmax = std::max(kmax, static_cast<int>(std::max(0.0, km)));
      }
  std::vector<std::vector<BandTable>> tab(rmax + 1);
  for (int r = 1; r <= rmax; ++r)
    for (int m = 0; m <= alpha; ++m) tab[r].push_back(radial_moment_table(r, m, kmax + alpha));

  auto node = [&](const SpectralDecomposition& dec, double rho, double chi, Support s, long& terms) {
    const int N = dec.N;
    // dense coefficient array c_k = F(lambda_k) chi over the k-box
    std::vector<int> ext(N), stride(N);
    std::size_t size = 1;
    double ground = 0.0;
    for (int n = 0; n < N; ++n) ground += dec.r[n] * dec.b[n];
    for (int n = N - 1; n >= 0; --n) {
      ext[n] = std::max(0, static_cast<int>(std::floor((s.hi / rho - ground) / (2.0 * dec.b[n])))) + 1;
      stride[n] = static_cast<int>(size);
      size *= ext[n];
    }
    std::vector<std::complex<double>> c(size, 0.0);
    std::vector<std::vector<int>> ks;
    std::vector<int> k;
    for_each_k(dec, rho, s.lo, s.hi, k, [&](const std::vector<int>& kk, double e) {
      std::size_t idx = 0;
      for (int n = 0; n < N; ++n) idx += static_cast<std::size_t>(kk[n]) * stride[n];
      c[idx] = F(rho * e) * chi;
      ks.push_back(kk);
    });
    terms = static_cast<long>(ks.size());
    double total = 0.0;
    for (const auto& m : compositions(alpha, N)) {
      double scale = multinomial(alpha, m);
      for (int n = 0; n < N; ++n) scale *= std::pow(rho * dec.b[n], dec.r[n] - m[n]);
      double acc = 0.0;
      std::vector<int> kp(N);
      for (const auto& kk : ks) {
        std::size_t idx = 0;
        for (int n = 0; n < N; ++n) idx += static_cast<std::size_t>(kk[n]) * stride[n];
        const std::complex<double> ck = c[idx];
        // offsets delta_n in [-m_n, m_n]
        std::function<void(int, double, std::size_t)> rec = [&](int n, double w, std::size_t j) {
          if (n == N) {
            acc += w * (ck * std::conj(c[j])).real();
            return;
          }
          for (int dlt = -m[n]; dlt <= m[n]; ++dlt) {
            const int q2 = kk[n] + dlt;
            if (q2 < 0 || q2 >= ext[n]) continue;
            const double t = tab[dec.r[n]][m[n]].at(kk[n], q2);
            if (t == 0.0) continue;
            rec(n + 1, w * t, j + static_cast<std::size_t>(q2) * stride[n]);
          }
        };
        rec(0, 1.0, 0);
      }
      total += scale * acc;
    }
    return total;
  };
  return mass_driver(spec, F, ell, q, pfor, node);
}

MassResult mass_alpha0_closed(const GroupSpec& spec, const SampledMultiplier& F, int ell, const QuadratureSpec& q,
                              const ParallelFor& pfor) {
  auto node = [&](const SpectralDecomposition& dec, double rho, double chi, Support s, long& terms) {
    double acc = 0.0;
    std::vector<int> k;
    terms = 0;
    for_each_k(dec, rho, s.lo, s.hi, k, [&](const std::vector<int>& kk, double e) {
      double w = std::norm(F(rho * e) * chi);
      for (int n = 0; n < dec.N; ++n) w *= phi_l2_norm_sq_closed(kk[n], rho * dec.b[n], dec.r[n]);
      acc += w;
      ++terms;
    });
    return acc;
  };
  return mass_driver(spec, F, ell, q, pfor, node);
}

double dilation_covariance_check(const GroupSpec& spec, const SampledMultiplier& F, double t,
                                 const std::vector<Point>& points, std::optional<int> ell, const QuadratureSpec& quad,
                                 const ParallelFor& pfor) {
  if (!(t > 0.0)) throw ValidationError("dilation check: t must be > 0");
  std::optional<int> ell_t;
  if (ell) {
    const double sh = 2.0 * std::log2(t);
    if (std::abs(sh - std::round(sh)) > 1e-12)
      throw ValidationError("dilation check: with a chi cutoff t must be an integer power of sqrt(2)");
    ell_t = *ell + static_cast<int>(std::round(sh));
  }
  const SampledMultiplier G = dilate_multiplier(F, t * t);
  const double tq = std::pow(t, -spec.Q());
  double worst = 0.0;
  for (const Point& p : points) {
    const auto lhs = eval_kernel(spec, G, ell_t, p, quad, pfor).value;
    const auto rhs = tq * eval_kernel(spec, F, ell, dilate(1.0 / t, p), quad, pfor).value;
    const double den = std::abs(rhs);
    const double e = den > 0.0 ? std::abs(lhs - rhs) / den : std::abs(lhs);
    worst = std::max(worst, e);
  }
  return worst;
}

}  // namespace metivier
