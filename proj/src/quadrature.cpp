#include "metivier/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "metivier/errors.hpp"

namespace metivier {

namespace {

QuadRule make_gauss_legendre(int n) {
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

// L_n^a(x) and L_{n-1}^a(x) times exp(-scale); scale is returned separately.
void laguerre_pair_scaled(int n, double a, double x, double& ln, double& lnm1, double& log_scale) {
  double p0 = 1.0, p1 = 1.0 + a - x;
  log_scale = 0.0;
  if (n == 0) {
    ln = 1.0;
    lnm1 = 0.0;
    return;
  }
  for (int k = 1; k < n; ++k) {
    double p2 = ((2.0 * k + 1.0 + a - x) * p1 - (k + a) * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
    if (std::abs(p1) > 1e100) {
      p0 *= 1e-100;
      p1 *= 1e-100;
      log_scale += 100.0 * std::numbers::ln10;
    }
  }
  ln = p1;
  lnm1 = p0;
}

QuadRule make_gauss_laguerre(int n, double a) {
  Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 0);
  for (int i = 0; i < n; ++i) diag(i) = 2.0 * i + 1.0 + a;
  for (int i = 1; i < n; ++i) sub(i - 1) = -std::sqrt(i * (i + a));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Gauss-Laguerre: tridiagonal eigensolver failed");
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  r.logw.resize(n);
  const double lg = std::lgamma(n + a + 1.0) - std::lgamma(n + 1.0);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    for (int it = 0; it < 3; ++it) {
      double ln, lnm1, s;
      laguerre_pair_scaled(n, a, x, ln, lnm1, s);
      double dln = (n * ln - (n + a) * lnm1) / x;
      double dx = ln / dln;
      if (!std::isfinite(dx)) break;
      x -= dx;
      if (std::abs(dx) <= 1e-15 * x) break;
    }
    // w = Gamma(n+a+1)/n! * x / ((n+1)^2 L_{n+1}(x)^2)
    double l1, l0, s;
    laguerre_pair_scaled(n + 1, a, x, l1, l0, s);
    double logw = lg + std::log(x) - 2.0 * std::log(n + 1.0) - 2.0 * (std::log(std::abs(l1)) + s);
    r.x[i] = x;
    r.w[i] = std::exp(logw);
    r.logw[i] = logw;
  }
  return r;
}

template <class Key, class Make>
const QuadRule& cached(std::map<Key, std::unique_ptr<QuadRule>>& cache, std::mutex& m, const Key& key,
                       Make make) {
  std::lock_guard<std::mutex> lk(m);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  auto ptr = std::make_unique<QuadRule>(make());
  const QuadRule& ref = *ptr;
  cache.emplace(key, std::move(ptr));
  return ref;
}

}  // namespace

const QuadRule& gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: n must be >= 1");
  static std::map<int, std::unique_ptr<QuadRule>> cache;
  static std::mutex m;
  return cached(cache, m, n, [n] { return make_gauss_legendre(n); });
}

QuadRule gauss_legendre(int n, double a, double b) {
  const QuadRule& r = gauss_legendre(n);
  QuadRule out;
  out.x.resize(n);
  out.w.resize(n);
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    out.x[i] = c + h * r.x[i];
    out.w[i] = h * r.w[i];
  }
  return out;
}

const QuadRule& gauss_laguerre(int n, double alpha) {
  if (n < 1) throw ValidationError("gauss_laguerre: n must be >= 1");
  if (!(alpha > -1.0)) throw ValidationError("gauss_laguerre: alpha must exceed -1");
  static std::map<std::pair<int, double>, std::unique_ptr<QuadRule>> cache;
  static std::mutex m;
  return cached(cache, m, std::make_pair(n, alpha), [n, alpha] { return make_gauss_laguerre(n, alpha); });
}

SphereRule sphere_rule(int dim, int n) {
  SphereRule s;
  const double pi = std::numbers::pi;
  if (dim == 1) {
    s.points = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)};
    s.w = {1.0, 1.0};
  } else if (dim == 2) {
    if (n < 2) throw ValidationError("sphere_rule: need at least 2 angular nodes");
    for (int i = 0; i < n; ++i) {
      double t = 2.0 * pi * (i + 0.5) / n;
      Eigen::VectorXd p(2);
      p << std::cos(t), std::sin(t);
      s.points.push_back(p);
      s.w.push_back(2.0 * pi / n);
    }
  } else if (dim == 3) {
    if (n < 2) throw ValidationError("sphere_rule: need at least 2 angular nodes");
    const QuadRule& g = gauss_legendre(n);
    int nphi = 2 * n;
    for (int i = 0; i < n; ++i) {
      double c = g.x[i], sn = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int j = 0; j < nphi; ++j) {
        double ph = 2.0 * pi * (j + 0.5) / nphi;
        Eigen::VectorXd p(3);
        p << sn * std::cos(ph), sn * std::sin(ph), c;
        s.points.push_back(p);
        s.w.push_back(g.w[i] * 2.0 * pi / nphi);
      }
    }
  } else {
    throw ValidationError("sphere_rule: only second-layer dimensions 1, 2, 3 are supported");
  }
  return s;
}

namespace {

double radical_inverse(std::uint64_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

std::vector<Eigen::VectorXd> sphere_samples(int dim, int n, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("sphere_samples: dimension must be positive");
  if (n < 1) throw ValidationError("sphere_samples: need at least one sample");
  const double pi = std::numbers::pi;
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  double shift = std::fmod(static_cast<double>(seed) / golden, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  if (dim == 1) {
    for (int i = 0; i < n; ++i) out.push_back(Eigen::VectorXd::Constant(1, (i + seed) % 2 == 0 ? 1.0 : -1.0));
  } else if (dim == 2) {
    for (int i = 0; i < n; ++i) {
      double t = 2.0 * pi * (i + 0.5 + shift) / n;
      Eigen::VectorXd p(2);
      p << std::cos(t), std::sin(t);
      out.push_back(p);
    }
  } else if (dim == 3) {
    // Fibonacci lattice
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - (2.0 * i + 1.0) / n;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double ph = 2.0 * pi * std::fmod(i / golden + shift, 1.0);
      Eigen::VectorXd p(3);
      p << r * std::cos(ph), r * std::sin(ph), z;
      out.push_back(p);
    }
  } else {
    // Halton coordinates pushed through Box-Muller, then normalized.
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                      59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};
    if (dim > 30) throw ValidationError("sphere_samples: dimension too large");
    for (int i = 0; i < n; ++i) {
      std::uint64_t idx = static_cast<std::uint64_t>(i) + 1 + seed;
      Eigen::VectorXd p(dim);
      for (int c = 0; c < dim; c += 2) {
        double u1 = radical_inverse(idx, primes[c]);
        double u2 = c + 1 < dim ? radical_inverse(idx, primes[c + 1]) : 0.25;
        u1 = std::max(u1, 1e-12);
        double rad = std::sqrt(-2.0 * std::log(u1));
        p(c) = rad * std::cos(2.0 * pi * u2);
        if (c + 1 < dim) p(c + 1) = rad * std::sin(2.0 * pi * u2);
      }
      double nr = p.norm();
      if (nr == 0.0) p(0) = nr = 1.0;
      out.push_back(p / nr);
    }
  }
  return out;
}

}  // namespace metivier
