// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "metivier/discrete_oracle.hpp"
#include "metivier/errors.hpp"
#include "metivier/group.hpp"
#include "metivier/kernel.hpp"
#include "metivier/laguerre.hpp"
#include "metivier/multiplier.hpp"
#include "metivier/numerology.hpp"
#include "metivier/plancherel.hpp"
#include "metivier/quadrature.hpp"
#include "metivier/spectral.hpp"

using namespace metivier;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string misses;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      misses += (misses.empty() ? "" : "; ") + what;
    }
  }
};

using Clock = std::chrono::steady_clock;

Point pt(std::vector<double> x, std::vector<double> u) {
  Point p;
  p.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  p.u = Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
  return p;
}

Eigen::Matrix3d A43() { return Eigen::Vector3d(0.5, 0.5, 0.0).asDiagonal(); }

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---- 1

void numerology(Outcome& o) {
  std::set<std::pair<int, int>> fails;
  int pairs = 0;
  for (int d1 = 1; d1 <= 64; ++d1)
    for (int d2 = 1; d2 <= d1; ++d2) {
      if (!admissible(d1, d2)) continue;
      ++pairs;
      if (!(2 * d1 > 3 * d2)) fails.insert({d1, d2});
      if (three_halves_holds(d1, d2) != (2 * d1 > 3 * d2)) o.check(false, "three_halves_holds disagrees");
    }
  o.check(fails == std::set<std::pair<int, int>>{{4, 3}, {8, 6}, {8, 7}}, "exceptional set");
  o.check(p_threshold(8, 6) == Rational(17, 12), "p(8,6)");
  o.check(p_threshold(8, 7) == Rational(14, 11), "p(8,7)");
  o.check(stein_tomas(3) == Rational(4, 3), "p_3");
  o.check(stein_tomas(6) == Rational(14, 9), "p_6");
  o.check(stein_tomas(7) == Rational(8, 5), "p_7");
  o.check(bar_p_threshold(4, 3) == Rational(6, 5), "bar p(4,3)");
  o.check(condition_iii_threshold(4, 3) == Rational(6, 5), "cond (4,3)");
  o.check(condition_iii_threshold(8, 6) == Rational(17, 12), "cond (8,6)");
  o.check(condition_iii_threshold(8, 7) == Rational(14, 11), "cond (8,7)");
  o.detail << pairs << " admissible pairs, predicate fails on " << fails.size();
}

// ---- 2

void so4(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> N;
  double worst_eig = 0.0, worst_rec = 0.0;
  int done = 0;
  while (done < 1000) {
    Eigen::Vector3d xi(N(rng), N(rng), N(rng)), eta(N(rng), N(rng), N(rng));
    const double a = xi.norm(), b = eta.norm();
    if (std::min({a, b, std::abs(a - b)}) < 1e-3 * (a + b)) continue;
    ++done;
    const Eigen::Matrix4d J = jminus(xi) + jplus(eta);
    auto [b1, b2] = so4_eigenvalues(xi, eta);
    auto jac = symmetric_eigen(-J * J);
    auto dec = decompose_skew(J);
    double e = std::max(std::abs(std::sqrt(jac.values(0)) - b1), std::abs(std::sqrt(jac.values(3)) - b2)) / b1;
    if (dec.N != 2) e = INFINITY;
    else e = std::max({e, std::abs(dec.b[0] - b1) / b1, std::abs(dec.b[1] - b2) / b1});
    worst_eig = std::max(worst_eig, e);
    auto [P1, P2] = so4_projections(xi, eta);
    const Eigen::Matrix4d R = -J * J - b1 * b1 * P1 - b2 * b2 * P2;
    worst_rec = std::max(worst_rec, R.norm());
  }
  o.check(worst_eig <= 1e-10, "eigenvalues");
  o.check(worst_rec <= 1e-9, "reconstruction");
  o.detail << "max eig err " << g(worst_eig) << ", max recon " << g(worst_rec);
}

// ---- 3

// ratio computed with an explicit Gauss-Laguerre rule of n nodes
double subelliptic_with_rule(int k, int m, double beta, int n) {
  auto weighted = [&](double expo) {
    const QuadRule& q = gauss_laguerre(n, m - 1.0 + expo);
    std::vector<double> seq(k + 1);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      laguerre_scaled_sequence(k, m - 1.0, q.x[i], 0.5 * q.logw[i], seq.data());
      s += seq[k] * seq[k];
    }
    return s;
  };
  return std::sqrt(std::pow(2.0, beta) * weighted(beta) / weighted(0.0) / std::pow(2.0 * k + m, beta));
}

void laguerre(Outcome& o) {
  double gram = 0.0;
  for (int m = 1; m <= 3; ++m)
    for (double lam : {0.5, 1.0, 3.0})
      for (int k = 0; k <= 12; ++k)
        for (int kp = 0; kp < k; ++kp) {
          const double d = phi_moment(k, kp, lam, m, 0);
          const double n = std::sqrt(phi_moment(k, k, lam, m, 0) * phi_moment(kp, kp, lam, m, 0));
          gram = std::max(gram, std::abs(d) / n);
        }
  o.check(gram <= 1e-8, "Gram off-diagonal");

  double worst_ratio_dev = 0.0;
  for (auto [k, m] : {std::pair{0, 1}, std::pair{3, 2}, std::pair{5, 1}}) {
    const double r = hermite_residual(k, 1.0, m, 1e-3) / hermite_residual(k, 1.0, m, 5e-4);
    worst_ratio_dev = std::max(worst_ratio_dev, std::abs(r / 4.0 - 1.0));
  }
  o.check(worst_ratio_dev <= 0.1, "Hermite h^2 ratio");

  double norm_dev = 0.0;
  for (int m = 1; m <= 3; ++m)
    for (double lam : {0.5, 2.0}) {
      auto c = [&](int k) { return phi_l2_norm_sq(k, lam, m) / (std::pow(lam, m) * std::tgamma(k + m) / (std::tgamma(k + 1) * std::tgamma(m))); };
      const double c0 = c(0);
      for (int k = 1; k <= 40; ++k) norm_dev = std::max(norm_dev, std::abs(c(k) / c0 - 1.0));
    }
  o.check(norm_dev <= 1e-8, "norm constant");

  // probe set: beta in {1/2,1,2,3,4}, m in 1..3, k up to 200, lambda in {1/4,1,4}
  double sup_all = 0.0, sup_le2 = 0.0, drift = 0.0;
  for (double beta : {0.5, 1.0, 2.0, 3.0, 4.0})
    for (int m = 1; m <= 3; ++m)
      for (int k : {0, 1, 2, 5, 10, 20, 50, 100, 200}) {
        for (double lam : {0.25, 1.0, 4.0}) {
          const double r = subelliptic_ratio(k, lam, m, beta);
          sup_all = std::max(sup_all, r);
          if (beta <= 2.0) sup_le2 = std::max(sup_le2, r);
        }
        const int n = 2 * k + 64;
        drift = std::max(drift, std::abs(subelliptic_with_rule(k, m, beta, 2 * n) / subelliptic_with_rule(k, m, beta, n) - 1.0));
      }
  o.check(drift <= 1e-8, "sub-elliptic stability");
  o.check(sup_all <= 4.0, "sub-elliptic max <= 4 (beta = 4 reaches " + g(sup_all) + ")");
  o.detail << "gram " << g(gram) << ", hermite ratio dev " << g(worst_ratio_dev) << ", norm dev " << g(norm_dev)
           << ", sub-elliptic max " << g(sup_all) << " (beta<=2: " << g(sup_le2) << "), doubling drift " << g(drift);
}

// ---- 4

void plancherel_identity(Outcome& o) {
  const GroupSpec h = heisenberg(1);
  const SampledMultiplier F = bump(0.5, 2.0);
  const double mu_side = weighted_l2_mass_first_layer(h, F, 0, 0).value;
  const double closed = mass_alpha0_closed(h, F, 0).value;
  const double rel = std::abs(mu_side - closed) / closed;
  o.check(rel <= 1e-10, "mu-side vs closed");

  // int |K_0|^2 over R^2 x R: radial in x, Gauss-Legendre panels in |x| and u
  QuadratureSpec q;
  const double k00 = std::abs(eval_kernel(h, F, 0, pt({0.0, 0.0}, {0.0})).value);
  q.abs_tol = 1e-7 * k00;
  std::vector<double> us, uw;
  for (double a = -100.0; a < 100.0; a += 5.0) {
    QuadRule r = gauss_legendre(20, a, a + 5.0);
    us.insert(us.end(), r.x.begin(), r.x.end());
    uw.insert(uw.end(), r.w.begin(), r.w.end());
  }
  std::vector<Eigen::VectorXd> uvec;
  for (double u : us) uvec.push_back(Eigen::VectorXd::Constant(1, u));
  double grid = 0.0;
  for (double a : {0.0, 4.0, 8.0}) {
    QuadRule r = gauss_legendre(20, a, a + 4.0 + (a == 8.0 ? 6.0 : 0.0));
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      auto ks = eval_kernel_u_batch(h, F, 0, Eigen::Vector2d(r.x[i], 0.0), uvec, q);
      double line = 0.0;
      for (std::size_t j = 0; j < ks.size(); ++j) line += uw[j] * std::norm(ks[j].value);
      grid += r.w[i] * 2.0 * std::numbers::pi * r.x[i] * line;
    }
  }
  const double grid_rel = std::abs(grid - mu_side) / mu_side;
  o.check(grid_rel <= 0.01, "spatial grid within 1%");
  o.detail << "mass " << g(mu_side) << ", closed rel " << g(rel) << ", spatial " << g(grid) << " rel " << g(grid_rel);
}

// ---- 5

void first_layer(Outcome& o) {
  const SampledMultiplier F = bump(0.5, 2.0);
  for (const auto& r : first_layer_scan(heisenberg(1), F, {0, 1, 2}, {0, 4})) {
    const double target = 2.0 * r.alpha - 1.0;
    const bool ok = std::abs(r.fitted_slope - target) <= 0.25;
    o.check(ok, "H1 alpha=" + std::to_string(r.alpha));
    o.detail << "H1 a=" << r.alpha << " slope " << g(r.fitted_slope) << " (target " << target << ", quad "
             << g(r.max_quad_error) << "); ";
  }
  QuadratureSpec q;
  q.angular_nodes = 8;
  for (const auto& r : first_layer_scan(metivier_4_3(A43()), F, {0, 1}, {0, 3}, q)) {
    const double target = 2.0 * r.alpha - 3.0;
    o.check(std::abs(r.fitted_slope - target) <= 0.3, "(4,3) alpha=" + std::to_string(r.alpha));
    o.detail << "(4,3) a=" << r.alpha << " slope " << g(r.fitted_slope) << " (target " << target << "); ";
  }
}

// ---- 6

void second_layer(Outcome& o) {
  const SampledMultiplier F = bump(0.5, 2.0);
  QuadratureSpec q;
  q.angular_nodes = 8;
  auto r = second_layer_scan_43(A43(), F, 1, {0, 3}, q);
  o.check(std::abs(r.fitted_slope + 1.0) <= 0.3, "alpha=1 slope");
  o.check(!r.fd_unstable, "fd stability");
  o.detail << "a=1 slope " << g(r.fitted_slope) << " (target -1, fd change " << g(r.fd_change) << "); ";
  const GroupSpec g43 = metivier_4_3(A43());
  for (int ell : {0, 1}) {
    auto s = second_layer_mass_43(A43(), F, ell, 0, 1e-4, q);
    auto f = weighted_l2_mass_first_layer(g43, F, ell, 0, q);
    const double rel = std::abs(s.mass - f.value) / f.value;
    o.check(rel <= s.quad_error_est + f.quad_error_est + 1e-12, "route equivalence ell=" + std::to_string(ell));
    o.detail << "a=0 ell=" << ell << " rel " << g(rel) << " vs err " << g(s.quad_error_est + f.quad_error_est) << "; ";
  }
}

// ---- 7

void mu_derivatives(Outcome& o) {
  const Eigen::Vector3d v = Eigen::Vector3d::UnitZ();
  auto a = mu_derivative_bounds_probe(A43(), v, 128, 2, 1e-4, 1e-3);
  auto b = mu_derivative_bounds_probe(A43(), v, 128, 2, 5e-5, 5e-4);
  const bool finite = std::isfinite(a.kappa_b) && std::isfinite(a.kappa_P);
  o.check(finite && a.kappa_b < 10.0 && a.kappa_P < 10.0, "kappa < 10");
  const double db = std::abs(b.kappa_b - a.kappa_b) / a.kappa_b, dp = std::abs(b.kappa_P - a.kappa_P) / a.kappa_P;
  o.check(db < 0.2 && dp < 0.2, "step-halving drift");
  o.detail << "kappa_b " << g(a.kappa_b) << ", kappa_P " << g(a.kappa_P) << ", drift " << g(db) << "/" << g(dp)
           << ", skipped " << a.skipped;
}

// ---- 8

void oracle(Outcome& o) {
  auto f = [](double x, double y, double u) { return std::exp(-0.25 * (x * x + y * y + u * u)) * (1.0 + x * u - 0.5 * y); };
  double prev = 0.0, ratio = 0.0;
  for (int n : {32, 64}) {
    auto op = build_sub_laplacian(n, 8.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(op.size()));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) v(static_cast<Eigen::Index>(op.index(i, j, k))) = f(op.coord(i), op.coord(j), op.coord(k));
    Eigen::VectorXd r = apply_field(op, 0, apply_field(op, 1, v)) - apply_field(op, 1, apply_field(op, 0, v)) - apply_du(op, v);
    double res = 0.0;
    const int mg = n / 4;
    for (int i = mg; i < n - mg; ++i)
      for (int j = mg; j < n - mg; ++j)
        for (int k = mg; k < n - mg; ++k) res = std::max(res, std::abs(r(static_cast<Eigen::Index>(op.index(i, j, k)))));
    if (prev > 0.0) ratio = prev / res;
    prev = res;
  }
  o.check(std::abs(ratio / 4.0 - 1.0) <= 0.15, "commutator O(h^2)");

  auto c = kernel_oracle_compare(bump(0.5, 2.0), {{12, 6.0}, {16, 6.0}, {20, 6.0}}, 256, false);
  o.check(c.monotone, "strictly decreasing");
  const double last = c.levels.back().rel_error;
  o.check(last <= 0.10, "final <= 10%");
  o.detail << "commutator ratio " << g(ratio) << "; errors";
  for (const auto& l : c.levels) o.detail << " " << g(l.rel_error);
  o.detail << "; box mass outside " << g(c.box_mass_fraction);
}

// ---- 9

SampledMultiplier random_smooth(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  struct B {
    double c, w, h;
  };
  std::vector<B> bs;
  for (int i = 0; i < 3; ++i) bs.push_back({0.9 + 2.5 * U(rng), 0.2 + 0.6 * U(rng), 0.2 + U(rng)});
  return sample_function(
      [bs](double lam) -> std::complex<double> {
        double v = 0.0;
        for (auto& b : bs) v += b.h * psi0(1.25 + 0.75 * (lam - b.c) / b.w);
        return v;
      },
      default_grid(Parity::Even), Parity::Even, 0.1, 4.6, "random");
}

void sandwich(Outcome& o) {
  std::mt19937_64 rng(7);
  const double s = 0.6;
  std::vector<double> Cm;
  double worst_lower = INFINITY;
  std::vector<SampledMultiplier> Fs;
  for (int i = 0; i < 20; ++i) Fs.push_back(random_smooth(rng));
  std::vector<double> l2, sob;
  for (const auto& F : Fs) {
    l2.push_back(l2_norm(F));
    sob.push_back(sobolev_norm(F, s).value);
  }
  for (int M = 1; M <= 64; M *= 2) {
    double c = 0.0;
    for (std::size_t i = 0; i < Fs.size(); ++i) {
      const double cs = cowling_sikora_norm(Fs[i], M);
      worst_lower = std::min(worst_lower, cs / l2[i]);
      c = std::max(c, cs / (l2[i] + std::pow(M, -s) * sob[i]));
    }
    Cm.push_back(c);
  }
  const double lo = *std::min_element(Cm.begin(), Cm.end()), hi = *std::max_element(Cm.begin(), Cm.end());
  o.check(worst_lower >= 1.0, "lower bound");
  o.check(hi / lo < 2.0, "C stable within 2x");
  o.detail << "min CS/L2 " << g(worst_lower) << ", C over M:";
  for (double c : Cm) o.detail << " " << g(c);
}

// ---- 10

void dilation(Outcome& o) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  const SampledMultiplier F = bump(0.5, 2.0);
  auto points = [&](int d1, int d2) {
    std::vector<Point> ps;
    for (int i = 0; i < 20; ++i) {
      Point p;
      p.x = Eigen::VectorXd(d1);
      p.u = Eigen::VectorXd(d2);
      for (int j = 0; j < d1; ++j) p.x(j) = U(rng);
      for (int j = 0; j < d2; ++j) p.u(j) = U(rng);
      ps.push_back(p);
    }
    return ps;
  };
  const auto ph = points(2, 1), pg = points(4, 3);
  // t = 1/2 evaluates at delta_2 p, where the kernel is small and oscillates:
  // finer mu-rule for (4,3), and an absolute floor of 1e-5 times the larger
  // of the two kernels' peaks (the lhs one is t^-Q times the rhs one)
  const GroupSpec h = heisenberg(1), g43 = metivier_4_3(A43());
  QuadratureSpec qh, q43;
  q43.radial_nodes = 64;
  q43.angular_nodes = 16;
  const double kh = std::abs(eval_kernel(h, F, std::nullopt, pt({0.0, 0.0}, {0.0})).value);
  const double kg = std::abs(eval_kernel(g43, F, 1, pt({0, 0, 0, 0}, {0, 0, 0}), q43).value);
  for (double t : {0.5, 2.0}) {
    qh.abs_tol = 1e-5 * std::max(1.0, std::pow(t, -h.Q())) * kh;
    q43.abs_tol = 1e-5 * std::max(1.0, std::pow(t, -g43.Q())) * kg;
    const double eh = dilation_covariance_check(h, F, t, ph, std::nullopt, qh);
    const double eg = dilation_covariance_check(g43, F, t, pg, 1, q43);
    o.check(eh <= 1e-5, "H1 t=" + g(t));
    o.check(eg <= 1e-5, "(4,3) t=" + g(t));
    o.detail << "t=" << g(t) << ": H1 " << g(eh) << ", (4,3) " << g(eg) << "; ";
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all = {
      {1, "numerology", 1.0, numerology},
      {2, "so(4) closed forms vs Jacobi", 5.0, so4},
      {3, "Laguerre suite", 30.0, laguerre},
      {4, "alpha=0 Plancherel identity", 120.0, plancherel_identity},
      {5, "first-layer scaling", 600.0, first_layer},
      {6, "second-layer scaling", 1800.0, second_layer},
      {7, "mu-derivative bounds", 60.0, mu_derivatives},
      {8, "discrete oracle convergence", 600.0, oracle},
      {9, "norm sandwich", 60.0, sandwich},
      {10, "dilation covariance", 300.0, dilation},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    o.check(secs <= c.budget_s, "runtime over " + g(c.budget_s) + " s");
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s) %.1fs: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.str().c_str());
    if (!o.pass) std::printf("     missed: %s\n", o.misses.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
