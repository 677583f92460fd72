#include "metivier/discrete_oracle.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "metivier/errors.hpp"
#include "metivier/group.hpp"
#include "metivier/quadrature.hpp"

namespace metivier {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Trip = Eigen::Triplet<double>;

// One-sided field X_which^{sgn} as a sparse matrix; sgn = +1 forward, -1 backward.
SpMat one_sided_field(const DiscreteOperator& op, int which, int sgn) {
  const int n = op.n;
  const double ih = 1.0 / op.h;
  std::vector<Trip> t;
  t.reserve(op.size() * 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const auto row = static_cast<int>(op.index(i, j, k));
        // X1 = d_x - (y/2) d_u, X2 = d_y + (x/2) d_u; the coefficient is constant
        // along both difference directions
        const double c = which == 0 ? -0.5 * op.coord(j) : 0.5 * op.coord(i);
        int di = which == 0 ? sgn : 0, dj = which == 0 ? 0 : sgn;
        // sgn (v(p + sgn e) - v(p)) / h
        double diag = -sgn * ih - sgn * c * ih;
        t.emplace_back(row, row, diag);
        const int ii = i + di, jj = j + dj, kk = k + sgn;
        if (ii >= 0 && ii < n && jj >= 0 && jj < n) t.emplace_back(row, static_cast<int>(op.index(ii, jj, k)), sgn * ih);
        if (kk >= 0 && kk < n && c != 0.0) t.emplace_back(row, static_cast<int>(op.index(i, j, kk)), sgn * c * ih);
      }
  SpMat X(static_cast<Eigen::Index>(op.size()), static_cast<Eigen::Index>(op.size()));
  X.setFromTriplets(t.begin(), t.end());
  return X;
}

double get(const Eigen::VectorXd& v, const DiscreteOperator& op, int i, int j, int k) {
  const int n = op.n;
  if (i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n) return 0.0;
  return v(static_cast<Eigen::Index>(op.index(i, j, k)));
}

}  // namespace

DiscreteOperator build_sub_laplacian(int n, double B) {
  if (n < 8 || n % 2 != 0) throw ValidationError("build_sub_laplacian: n must be even and >= 8");
  if (static_cast<double>(n) * n * n > 1e6) throw ValidationError("build_sub_laplacian: n^3 exceeds 1e6");
  if (!(B > 0.0) || !std::isfinite(B)) throw ValidationError("build_sub_laplacian: B must be positive");
  DiscreteOperator op;
  op.n = n;
  op.B = B;
  op.h = 2.0 * B / n;
  SpMat L(static_cast<Eigen::Index>(op.size()), static_cast<Eigen::Index>(op.size()));
  for (int which : {0, 1})
    for (int sgn : {1, -1}) {
      const SpMat X = one_sided_field(op, which, sgn);
      L += SpMat(X.transpose() * X);
    }
  L *= 0.5;
  // exact symmetry: (a + b) / 2 is the same double as (b + a) / 2
  SpMat Lt = L.transpose();
  op.L = 0.5 * (L + Lt);
  op.L.prune(0.0);
  op.L.makeCompressed();
  return op;
}

Eigen::VectorXd apply_field(const DiscreteOperator& op, int which, const Eigen::VectorXd& v, Difference d) {
  if (which != 0 && which != 1) throw ValidationError("apply_field: field index must be 0 or 1");
  if (v.size() != static_cast<Eigen::Index>(op.size())) throw ValidationError("apply_field: size mismatch");
  const int n = op.n;
  const double h = op.h;
  Eigen::VectorXd out(v.size());
  auto diff = [&](int i, int j, int k, int di, int dj, int dk) {
    const double c = get(v, op, i, j, k);
    switch (d) {
      case Difference::Forward: return (get(v, op, i + di, j + dj, k + dk) - c) / h;
      case Difference::Backward: return (c - get(v, op, i - di, j - dj, k - dk)) / h;
      default: return (get(v, op, i + di, j + dj, k + dk) - get(v, op, i - di, j - dj, k - dk)) / (2.0 * h);
    }
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double du = diff(i, j, k, 0, 0, 1);
        const double val = which == 0 ? diff(i, j, k, 1, 0, 0) - 0.5 * op.coord(j) * du
                                      : diff(i, j, k, 0, 1, 0) + 0.5 * op.coord(i) * du;
        out(static_cast<Eigen::Index>(op.index(i, j, k))) = val;
      }
  return out;
}

Eigen::VectorXd apply_du(const DiscreteOperator& op, const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(op.size())) throw ValidationError("apply_du: size mismatch");
  const int n = op.n;
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out(static_cast<Eigen::Index>(op.index(i, j, k))) =
            (get(v, op, i, j, k + 1) - get(v, op, i, j, k - 1)) / (2.0 * op.h);
  return out;
}

double gershgorin_defect(const DiscreteOperator& op) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < op.L.outerSize(); ++r) {
    double diag = 0.0, off = 0.0;
    for (SpMat::InnerIterator it(op.L, r); it; ++it) {
      if (it.col() == r) diag += it.value();
      else off += std::abs(it.value());
    }
    worst = std::max(worst, off - diag);
  }
  return worst;
}

double gershgorin_upper(const DiscreteOperator& op) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < op.L.outerSize(); ++r) {
    double s = 0.0;
    for (SpMat::InnerIterator it(op.L, r); it; ++it) s += std::abs(it.value());
    worst = std::max(worst, s);
  }
  return worst;
}

double symmetry_defect(const DiscreteOperator& op) {
  const SpMat Lt = op.L.transpose();
  const SpMat D = op.L - Lt;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < D.outerSize(); ++r)
    for (SpMat::InnerIterator it(D, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

Eigen::VectorXd apply(const DiscreteOperator& op, const Eigen::VectorXd& v, const ParallelFor& pfor) {
  const Eigen::Index N = op.L.rows();
  if (v.size() != N) throw ValidationError("apply: size mismatch");
  Eigen::VectorXd out(N);
  constexpr Eigen::Index chunk = 4096;
  const auto nchunks = static_cast<std::size_t>((N + chunk - 1) / chunk);
  pfor(nchunks, [&](std::size_t c) {
    const Eigen::Index lo = static_cast<Eigen::Index>(c) * chunk, hi = std::min(N, lo + chunk);
    for (Eigen::Index r = lo; r < hi; ++r) {
      double s = 0.0;
      for (SpMat::InnerIterator it(op.L, r); it; ++it) s += it.value() * v(it.col());
      out(r) = s;
    }
  });
  return out;
}

double lambda_max_estimate(const DiscreteOperator& op, const ParallelFor& pfor) {
  const auto N = static_cast<Eigen::Index>(op.size());
  // checkerboard-weighted start: heavy on the top of the spectrum
  Eigen::VectorXd v(N);
  for (int i = 0; i < op.n; ++i)
    for (int j = 0; j < op.n; ++j)
      for (int k = 0; k < op.n; ++k)
        v(static_cast<Eigen::Index>(op.index(i, j, k))) =
            ((i + j + k) % 2 ? -1.0 : 1.0) * (1.0 + 0.1 * std::sin(0.37 * i + 0.71 * j + 1.13 * k));
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd w = apply(op, v, pfor);
    lam = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return 1.01 * lam;
}

ChebyshevResult chebyshev_apply(const std::function<double(double)>& F, const DiscreteOperator& op,
                                const Eigen::VectorXd& vec, int degree, double tail_tol, const ParallelFor& pfor) {
  if (degree < 4) throw ValidationError("chebyshev_apply: degree must be >= 4");
  if (vec.size() != static_cast<Eigen::Index>(op.size())) throw ValidationError("chebyshev_apply: size mismatch");
  ChebyshevResult res;
  res.lambda_max = lambda_max_estimate(op, pfor);
  const double lm = res.lambda_max;
  if (!(lm > 0.0)) throw NumericalError("chebyshev_apply: operator has no positive spectrum");

  // coefficients up to 2 degree from M Chebyshev-Gauss nodes
  const int J = 2 * degree, M = 2 * J;
  std::vector<double> fv(M);
  double fmax = 0.0;
  for (int q = 0; q < M; ++q) {
    const double th = std::numbers::pi * (q + 0.5) / M;
    fv[q] = F(0.5 * lm * (std::cos(th) + 1.0));
    fmax = std::max(fmax, std::abs(fv[q]));
  }
  std::vector<double> c(J + 1, 0.0);
  for (int j = 0; j <= J; ++j) {
    double s = 0.0;
    for (int q = 0; q < M; ++q) s += fv[q] * std::cos(j * std::numbers::pi * (q + 0.5) / M);
    c[j] = 2.0 * s / M;
  }
  // rounding noise in the cosine sums, not signal
  double cmax = 0.0;
  for (double x : c) cmax = std::max(cmax, std::abs(x));
  for (double& x : c)
    if (std::abs(x) < 1e-15 * cmax) x = 0.0;
  for (int j = degree + 1; j <= J; ++j) res.tail += std::abs(c[j]);
  if (res.tail > tail_tol * fmax && fmax > 0.0)
    throw NumericalError("chebyshev_apply: coefficient tail " + std::to_string(res.tail) + " above threshold");

  // T_j of A = (2 / lm) L - I
  auto A = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return (2.0 / lm) * apply(op, x, pfor) - x; };
  res.value = 0.5 * c[0] * vec;
  Eigen::VectorXd t0 = vec, t1 = A(vec);
  res.value += c[1] * t1;
  for (int j = 2; j <= degree; ++j) {
    Eigen::VectorXd t2 = 2.0 * A(t1) - t0;
    if (c[j] != 0.0) res.value += c[j] * t2;
    t0 = std::move(t1);
    t1 = std::move(t2);
  }
  return res;
}

double h1_kernel_l2_sq(const SampledMultiplier& F) {
  // (2 pi)^{-3} int dmu sum_k F((2k+1)|mu|)^2 2 pi |mu|, and sum (2k+1)^{-2} = pi^2 / 8
  const auto [lo, hi] = F.nonzero_hull();
  if (!(hi > lo)) return 0.0;
  const double a = std::max(lo, 0.0);
  const QuadRule g = gauss_legendre(256, a, hi);
  double s = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * g.x[i] * std::norm(F(g.x[i]));
  return s / 16.0;
}

OracleComparison kernel_oracle_compare(const SampledMultiplier& F, const std::vector<std::pair<int, double>>& levels,
                                       int degree, bool strict, const QuadratureSpec& quad,
                                       const ParallelFor& pfor) {
  if (levels.empty()) throw ValidationError("kernel_oracle_compare: no levels");
  if (!F.is_zero()) {
    const auto [lo, hi] = F.nonzero_hull();
    const double slack = 2.0 * F.grid.step;  // the cubic interpolant reaches one node past the support
    if (lo < 0.5 - slack || hi > 2.0 + slack)
      throw ValidationError("kernel_oracle_compare: F must be supported in [1/2, 2]");
  }
  const GroupSpec h1 = heisenberg(1);
  const double total = h1_kernel_l2_sq(F);
  const auto F_real = [&F](double l) { return F.real_at(l); };

  // far grid points carry tiny K: judge their quadrature against the peak
  QuadratureSpec q = quad;
  if (!F.is_zero()) {
    const Point origin{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)};
    q.abs_tol = std::max(q.abs_tol, 1e-5 * std::abs(eval_kernel(h1, F, std::nullopt, origin, quad, pfor).value));
  }

  OracleComparison out;
  std::size_t widest = 0;
  for (std::size_t li = 0; li < levels.size(); ++li)
    if (levels[li].second > levels[widest].second ||
        (levels[li].second == levels[widest].second && levels[li].first > levels[widest].first))
      widest = li;

  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto [n, B] = levels[li];
    const DiscreteOperator op = build_sub_laplacian(n, B);
    OracleLevel lev;
    lev.n = n;
    lev.B = B;
    lev.h = op.h;

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.size()));
    delta(static_cast<Eigen::Index>(op.index(n / 2, n / 2, n / 2))) = 1.0 / (op.h * op.h * op.h);

    Eigen::VectorXd v, K = Eigen::VectorXd::Zero(delta.size());
    if (F.is_zero()) {
      v = Eigen::VectorXd::Zero(delta.size());
    } else {
      // the bump sits low in [0, lambda_max], so the default degree may be short
      ChebyshevResult cr;
      for (int deg = degree;; deg *= 2) {
        try {
          cr = chebyshev_apply(F_real, op, delta, deg, 1e-3, pfor);
          lev.degree = deg;
          break;
        } catch (const NumericalError&) {
          if (deg >= 8 * degree) throw;
        }
      }
      v = std::move(cr.value);
      lev.cheb_tail = cr.tail / (op.h * op.h * op.h);
      lev.lambda_max = cr.lambda_max;

      // K depends on (|x|, u): one u-batch per distinct |x|^2 on the grid
      std::map<long, std::vector<std::pair<int, int>>> by_r2;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) by_r2[static_cast<long>(i - n / 2) * (i - n / 2) + static_cast<long>(j - n / 2) * (j - n / 2)].push_back({i, j});
      std::vector<Eigen::VectorXd> us;
      for (int k = 0; k < n; ++k) us.push_back(Eigen::VectorXd::Constant(1, op.coord(k)));
      std::vector<std::pair<long, std::vector<std::pair<int, int>>>> radii(by_r2.begin(), by_r2.end());
      std::vector<std::vector<double>> vals(radii.size());
      pfor(radii.size(), [&](std::size_t ri) {
        Eigen::VectorXd x(2);
        x << std::sqrt(static_cast<double>(radii[ri].first)) * op.h, 0.0;
        auto res = eval_kernel_u_batch(h1, F, std::nullopt, x, us, q);
        vals[ri].resize(n);
        for (int k = 0; k < n; ++k) vals[ri][k] = res[k].value.real();
      });
      for (std::size_t ri = 0; ri < radii.size(); ++ri)
        for (auto [i, j] : radii[ri].second)
          for (int k = 0; k < n; ++k) K(static_cast<Eigen::Index>(op.index(i, j, k))) = vals[ri][k];
    }
    const double kn = K.norm();
    lev.rel_error = kn > 0.0 ? (v - K).norm() / kn : (v.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    lev.box_mass_fraction = total > 0.0 ? 1.0 - K.squaredNorm() * op.h * op.h * op.h / total : 0.0;
    if (li == widest) {
      out.box_mass_fraction = lev.box_mass_fraction;
      out.box_ok = lev.box_mass_fraction <= 1e-4;
      if (strict && !out.box_ok)
        throw ValidationError("kernel_oracle_compare: " + std::to_string(lev.box_mass_fraction) +
                              " of the kernel mass lies outside the box (limit 1e-4)");
    }
    out.levels.push_back(lev);
  }
  for (std::size_t i = 1; i < out.levels.size(); ++i)
    if (!(out.levels[i].rel_error < out.levels[i - 1].rel_error)) out.monotone = false;
  return out;
}

}  // namespace metivier
