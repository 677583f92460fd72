#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "metivier/errors.hpp"
#include "metivier/kernel.hpp"
#include "metivier/laguerre.hpp"
#include "metivier/quadrature.hpp"

using namespace metivier;

namespace {

const double kPi = std::numbers::pi;

template <class F>
double simpson(F f, double a, double b, double tol, int depth = 50) {
  auto rec = [&](auto&& self, double lo, double hi, double flo, double fmid, double fhi, double whole, int d) -> double {
    double mid = 0.5 * (lo + hi), lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    double flm = f(lm), frm = f(rm);
    double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid), right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return self(self, lo, mid, flo, flm, fmid, left, d - 1) + self(self, mid, hi, fmid, frm, fhi, right, d - 1);
  };
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(rec, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

// analytic form of bump(0.5, 2)
double bump_exact(double lam) {
  double s = 0.5 + 1.5 * (std::abs(lam) - 0.5) / 1.5;
  if (s <= 0.5 || s >= 2.0) return 0.0;
  return std::exp(16.0 / 9.0 - 1.0 / ((s - 0.5) * (2.0 - s)));
}

Point pt(std::vector<double> x, std::vector<double> u) {
  Point p;
  p.x = Eigen::Map<Eigen::VectorXd>(x.data(), x.size());
  p.u = Eigen::Map<Eigen::VectorXd>(u.data(), u.size());
  return p;
}

SpectralDecomposition fake_dec(std::vector<double> b, std::vector<int> r) {
  SpectralDecomposition d;
  d.N = static_cast<int>(b.size());
  d.b = b;
  d.r = r;
  return d;
}

}  // namespace

TEST_CASE("eigenvalue lattice") {
  auto h = heisenberg(1);
  auto dec = decompose_j(h, Eigen::VectorXd::Constant(1, 1.0));
  CHECK(eigenvalue_lambda(dec, {0}) == doctest::Approx(1.0));
  CHECK(eigenvalue_lambda(dec, {3}) == doctest::Approx(7.0));
  auto d2 = fake_dec({3.0, 1.0}, {1, 1});
  CHECK(eigenvalue_lambda(d2, {1, 2}) == 14.0);
  CHECK_THROWS_AS(eigenvalue_lambda(d2, {1}), ValidationError);

  CHECK(enumerate_k(fake_dec({1.0}, {1}), 4.0) == std::vector<std::vector<int>>{{0}, {1}});
  CHECK(enumerate_k(d2, 8.0) == std::vector<std::vector<int>>{{0, 0}, {0, 1}, {0, 2}});
  CHECK(enumerate_k(d2, 3.9).empty());
  CHECK_THROWS_AS(enumerate_k(d2, 0.0), ValidationError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  for (int t = 0; t < 50; ++t) {
    auto d = fake_dec({U(rng), U(rng), U(rng)}, {1, 2, 1});
    const double cap = 4.0 * U(rng) + 3.0;
    std::set<std::vector<int>> brute;
    const int box = static_cast<int>(cap / (2.0 * std::min({d.b[0], d.b[1], d.b[2]}))) + 1;
    for (int a = 0; a <= box; ++a)
      for (int b = 0; b <= box; ++b)
        for (int c = 0; c <= box; ++c)
          if (eigenvalue_lambda(d, {a, b, c}) <= cap) brute.insert({a, b, c});
    auto got = enumerate_k(d, cap);
    CHECK(std::set<std::vector<int>>(got.begin(), got.end()) == brute);
    CHECK(got.size() == brute.size());
    for (auto& k : got)
      for (int n = 0; n < 3; ++n) {
        auto kp = k;
        ++kp[n];
        CHECK(eigenvalue_lambda(d, kp) > eigenvalue_lambda(d, k));
      }
  }
}

TEST_CASE("ell0") {
  auto h = heisenberg(1);
  auto r = ell0(h, {0.25, 4.0}, {0.5, 2.0});
  REQUIRE(r);
  CHECK(r->ell_min == -3);
  CHECK(r->ell0 == 3);
  auto r2 = ell0(h, {0.125, 2.0}, {0.5, 2.0});
  REQUIRE(r2);
  CHECK(r2->ell0 == 2);
  CHECK_FALSE(ell0(h, {-2.0, 0.0}, {0.5, 2.0}));
  CHECK_THROWS_AS(ell0(h, {1.0, 1.0}, {0.5, 2.0}), ValidationError);

  auto F = bump(0.5, 2.0);
  auto hull = F.nonzero_hull();
  auto e = ell0(h, hull, {0.5, 2.0});
  REQUIRE(e);
  Point p = pt({0.3, -0.2}, {0.1});
  CHECK(std::abs(eval_kernel(h, F, e->ell_min - 1, p).value) <= 1e-12);
  CHECK(std::abs(eval_kernel(h, F, e->ell_min - 3, p).value) == 0.0);
  // the lowest compatible shell only touches the vanishing end of supp F
  CHECK(std::abs(eval_kernel(h, F, e->ell_min + 1, p).value) > 0.0);

  auto g43 = metivier_4_3(Eigen::Vector3d(0.5, 0.5, 0.0).asDiagonal());
  auto e43 = ell0(g43, hull, {0.5, 2.0});
  REQUIRE(e43);
  // ground energy b1 + b2 = 2|mu| up to the (x) part, min over directions
  CHECK(e43->ground_min == doctest::Approx(2.0).epsilon(1e-6));
  Point q = pt({0.1, 0.2, 0.0, -0.1}, {0.0, 0.1, 0.0});
  QuadratureSpec qs;
  qs.angular_nodes = 8;
  CHECK(std::abs(eval_kernel(g43, F, e43->ell_min - 1, q, qs).value) == 0.0);
}

TEST_CASE("Heisenberg central values against one-dimensional oracles") {
  auto h = heisenberg(1);
  auto F = bump(0.5, 2.0);
  // K(0, u) = (2 pi)^-2 2 sum_k (2k+1)^-2 g(u / (2k+1)), g(v) = int F(l) l cos(l v) dl
  auto g = [&](double v) {
    return simpson([&](double l) { return bump_exact(l) * l * std::cos(l * v); }, 0.5, 2.0, 1e-15);
  };
  for (double u : {0.0, 0.7, 3.0, 9.0}) {
    double s = 0.0;
    const int K = 4000;
    for (int k = 0; k <= K; ++k) s += g(u / (2.0 * k + 1.0)) / std::pow(2.0 * k + 1.0, 2);
    // remaining terms with g frozen at g(0); the next correction is O(u^2 / K^4)
    double rest = kPi * kPi / 8.0;
    for (int k = 0; k <= K; ++k) rest -= 1.0 / std::pow(2.0 * k + 1.0, 2);
    s += rest * g(0.0);
    const double ref = 2.0 * s / (4.0 * kPi * kPi);
    auto r = eval_kernel(h, F, std::nullopt, pt({0.0, 0.0}, {u}));
    CAPTURE(u);
    CHECK(r.value.real() == doctest::Approx(ref).epsilon(1e-6));
    CHECK(std::abs(r.value.imag()) <= 1e-8 * std::abs(r.value));
    if (u == 0.0) {
      const double m1 = simpson([](double l) { return l * bump_exact(l); }, 0.5, 2.0, 1e-15);
      CHECK(r.value.real() == doctest::Approx(m1 / 16.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("kernel symmetries, tails and convergence") {
  auto h = heisenberg(1);
  auto F = bump(0.5, 2.0);
  for (auto p : {pt({0.4, -1.1}, {0.3}), pt({2.0, 0.5}, {-1.7}), pt({0.0, 3.0}, {4.0})}) {
    auto a = eval_kernel(h, F, std::nullopt, p).value;
    Point m{-p.x, -p.u};
    auto b = eval_kernel(h, F, std::nullopt, m).value;
    CHECK(std::abs(a.imag()) <= 1e-8 * std::abs(a));
    CHECK(std::abs(a - b) <= 1e-8 * std::abs(a));
    // depends on x only through |x| for H1
    Point rot{Eigen::Vector2d(p.x.norm(), 0.0), p.u};
    CHECK(std::abs(eval_kernel(h, F, std::nullopt, rot).value - a) <= 1e-10 * std::abs(a));
    // the Euclidean tail below the dyadic shells is consistent with more shells
    QuadratureSpec q6;
    q6.tail_octaves = 6;
    QuadratureSpec q13;
    q13.tail_octaves = 13;
    auto c6 = eval_kernel(h, F, std::nullopt, p, q6).value;
    auto c13 = eval_kernel(h, F, std::nullopt, p, q13).value;
    CHECK(std::abs(c6 - c13) <= 1e-4 * std::abs(a));
    CHECK(std::abs(c13 - a) <= 1e-7 * std::abs(a));
    CHECK(std::abs(c13 - a) < std::abs(c13 - c6));
  }
  // sum over the dyadic shells in |mu| reproduces the un-truncated kernel
  {
    Point p = pt({0.5, 0.2}, {0.4});
    auto full = eval_kernel(h, F, std::nullopt, p).value;
    std::complex<double> s = 0.0;
    for (int l = -2; l <= 9; ++l) s += eval_kernel(h, F, l, p).value;
    // shells beyond 9 carry about 2^-10 of the mass near mu = 0
    CHECK(std::abs(s - full) <= 4e-3 * std::abs(full));
    CHECK(std::abs(s - full) >= 0.0);
  }
  // node doubling shrinks the error estimate
  double prev = INFINITY;
  for (int nr : {16, 32, 64, 128}) {
    QuadratureSpec q;
    q.radial_nodes = nr;
    q.max_rel_error = 1.0;
    auto r = eval_kernel(h, F, 1, pt({0.7, 0.0}, {2.0}), q);
    CHECK(r.quad_error_est < prev);
    prev = r.quad_error_est;
  }
  // zero multiplier
  SampledMultiplier Z = F;
  for (auto& v : Z.values) v = 0.0;
  CHECK(eval_kernel(h, Z, std::nullopt, pt({1, 1}, {1})).value == 0.0);
  // supp F touching 0 needs a cutoff
  auto br = bochner_riesz(2.0, 1.0);
  CHECK_THROWS_AS(eval_kernel(h, br, std::nullopt, pt({0, 0}, {0})), ValidationError);
  CHECK(std::isfinite(eval_kernel(h, br, 1, pt({0.5, 0}, {0.1})).value.real()));
  // error threshold enforced
  QuadratureSpec strict;
  strict.radial_nodes = 4;
  strict.max_rel_error = 1e-12;
  CHECK_THROWS_AS(eval_kernel(h, F, 0, pt({0.7, 0.0}, {2.0}), strict), NumericalError);
}

TEST_CASE("(4,3) kernel against a Cartesian mu-grid") {
  auto g = metivier_4_3(Eigen::Vector3d(0.5, 0.5, 0.0).asDiagonal());
  auto F = bump(0.5, 2.0);
  const int ell = 1;
  Point p = pt({0.3, -0.2, 0.5, 0.1}, {0.2, -0.4, 0.3});
  auto r = eval_kernel(g, F, ell, p);
  // tensor Gauss-Legendre over the cube containing the shell
  const double R = std::ldexp(2.0, -ell);
  const int n = 36;
  QuadRule q = gauss_legendre(n, -R, R);
  double acc = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        Eigen::Vector3d mu(q.x[a], q.x[b], q.x[c]);
        const double chi = dyadic_chi_value(0, std::ldexp(mu.norm(), ell));
        if (chi == 0.0) continue;
        auto dec = decompose_j(g, mu);
        double S = 0.0;
        for (const auto& k : enumerate_k(dec, 2.0)) {
          double prod = bump_exact(eigenvalue_lambda(dec, k));
          for (int m = 0; m < dec.N; ++m) prod *= phi_radial(k[m], dec.b[m], dec.r[m], p.x.dot(dec.P[m] * p.x));
          S += prod;
        }
        acc += q.w[a] * q.w[b] * q.w[c] * chi * S * std::cos(mu.dot(p.u));
      }
  const double ref = acc * std::pow(2.0 * kPi, -3.0 - 2.0);
  CHECK(r.value.real() == doctest::Approx(ref).epsilon(2e-4));
  CHECK(std::abs(r.value.imag()) <= 1e-8 * std::abs(r.value));
}

TEST_CASE("first-layer masses") {
  auto h = heisenberg(1);
  auto F = bump(0.5, 2.0);
  // alpha = 0: tables versus closed-form norms
  for (int ell : {0, 2}) {
    auto a = weighted_l2_mass_first_layer(h, F, ell, 0);
    auto b = mass_alpha0_closed(h, F, ell);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-10));
  }
  // independent 1-D oracle: (2pi)^-3 2 int rho sum_k |F((2k+1) rho) chi(rho)|^2 2 pi rho d rho
  {
    auto integrand = [&](double rho) {
      double s = 0.0;
      for (int k = 0; (2 * k + 1) * rho < 2.0; ++k) s += std::pow(bump_exact((2 * k + 1) * rho), 2);
      return s * 2.0 * kPi * rho * std::pow(dyadic_chi_value(0, rho), 2);
    };
    const double ref = 2.0 * std::pow(2.0 * kPi, -3.0) * simpson(integrand, 0.5, 2.0, 1e-14);
    CHECK(weighted_l2_mass_first_layer(h, F, 0, 0).value == doctest::Approx(ref).epsilon(1e-8));
  }
  auto g = metivier_4_3(Eigen::Vector3d(0.5, 0.5, 0.0).asDiagonal());
  QuadratureSpec q;
  q.angular_nodes = 8;
  auto a43 = weighted_l2_mass_first_layer(g, F, 1, 0, q);
  auto b43 = mass_alpha0_closed(g, F, 1, q);
  CHECK(a43.value == doctest::Approx(b43.value).epsilon(1e-10));
  CHECK(a43.value > 0.0);
  // alpha = 1 on H1 at l = 0: direct quadrature of |x|^2 |K^(x, mu)|^2 over x,
  // outer rule split where the k-range changes
  {
    double tot = 0.0;
    for (auto [lo, hi] : {std::pair{0.5, 2.0 / 3.0}, {2.0 / 3.0, 1.0}, {1.0, 2.0}}) {
      const QuadRule& go = gauss_legendre(120, lo, hi);
      for (std::size_t i = 0; i < go.x.size(); ++i) {
        const double rho = go.x[i];
        const double chi = dyadic_chi_value(0, rho);
        const QuadRule& gi = gauss_legendre(400, 0.0, 160.0 / rho);
        double in = 0.0;
        for (std::size_t j = 0; j < gi.x.size(); ++j) {
          double v = 0.0;
          for (int k = 0; (2 * k + 1) * rho < 2.0; ++k)
            v += bump_exact((2 * k + 1) * rho) * phi_radial(k, rho, 1, gi.x[j]);
          in += gi.w[j] * gi.x[j] * v * v;
        }
        // int_{R^2} |x|^2 |.|^2 dx = pi int_0^inf s |.|^2 ds
        tot += go.w[i] * chi * chi * kPi * in;
      }
    }
    const double ref = 2.0 * std::pow(2.0 * kPi, -3.0) * tot;
    CHECK(weighted_l2_mass_first_layer(h, F, 0, 1).value == doctest::Approx(ref).epsilon(1e-6));
  }
  SampledMultiplier Z = F;
  for (auto& v : Z.values) v = 0.0;
  CHECK(weighted_l2_mass_first_layer(h, Z, 0, 2).value == 0.0);
  CHECK_THROWS_AS(weighted_l2_mass_first_layer(h, F, 0, -1), ValidationError);
}

TEST_CASE("dilation covariance") {
  auto h = heisenberg(1);
  auto F = bump(0.5, 2.0);
  std::vector<Point> pts{pt({0.3, 0.1}, {0.2}), pt({-1.0, 0.4}, {1.1}), pt({0.0, 0.0}, {0.0})};
  CHECK(dilation_covariance_check(h, F, 1.0, pts, std::nullopt) == 0.0);
  CHECK(dilation_covariance_check(h, F, 2.0, pts, std::nullopt) <= 1e-5);
  CHECK(dilation_covariance_check(h, F, 0.5, pts, std::nullopt) <= 1e-5);
  CHECK(dilation_covariance_check(h, F, 2.0, pts, 1) <= 1e-10);
  CHECK_THROWS_AS(dilation_covariance_check(h, F, 1.5, pts, 1), ValidationError);
}
