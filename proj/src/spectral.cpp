#include "metivier/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "metivier/errors.hpp"
#include "metivier/quadrature.hpp"

namespace metivier {

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& S, double tol) {
  const int n = static_cast<int>(S.rows());
  if (S.cols() != n) throw ValidationError("symmetric_eigen: matrix is not square");
  const double fro = S.norm();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, fro))
    throw ValidationError("symmetric_eigen: matrix is not symmetric");
  Eigen::MatrixXd a = 0.5 * (S + S.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  auto off = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  SymmetricEigen out;
  int sweep = 0;
  while (off() > tol * fro) {
    if (sweep == 30) throw NumericalError("symmetric_eigen: Jacobi iteration did not converge in 30 sweeps");
    ++sweep;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        // negligible next to both diagonal entries: drop instead of rotating
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) && std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  out.sweeps = sweep;
  return out;
}

SpectralDecomposition decompose_skew(const Eigen::MatrixXd& J, double cluster_rel_tol) {
  const int d = static_cast<int>(J.rows());
  if (J.cols() != d) throw ValidationError("decompose: matrix is not square");
  if (!(cluster_rel_tol > 0.0)) throw ValidationError("decompose: cluster tolerance must be positive");
  Eigen::MatrixXd S = J.transpose() * J;  // = -J^2 for skew J, symmetric by construction
  if (S.norm() == 0.0) throw ValidationError("decompose: zero form (mu = 0)");
  SymmetricEigen es = symmetric_eigen(S);
  std::vector<double> s(d);
  for (int i = 0; i < d; ++i) s[i] = std::sqrt(std::max(0.0, es.values(i)));
  const double smax = s[0];
  const double zero_tol = 1e-6 * smax;

  SpectralDecomposition dec;
  dec.P0 = Eigen::MatrixXd::Zero(d, d);
  int i = 0;
  while (i < d) {
    if (s[i] <= zero_tol) {
      for (int j = i; j < d; ++j) dec.P0 += es.vectors.col(j) * es.vectors.col(j).transpose();
      dec.r0 = d - i;
      break;
    }
    int j = i + 1;
    while (j < d && s[j] > zero_tol && (s[j - 1] - s[j]) <= cluster_rel_tol * s[j - 1]) ++j;
    int mult = j - i;
    if (mult % 2 != 0)
      throw NumericalError("decompose: odd multiplicity in a nonzero eigenvalue cluster; adjust cluster_rel_tol");
    double mean = 0.0;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);
    for (int t = i; t < j; ++t) {
      mean += s[t];
      P += es.vectors.col(t) * es.vectors.col(t).transpose();
    }
    dec.b.push_back(mean / mult);
    dec.r.push_back(mult / 2);
    dec.P.push_back(P);
    i = j;
  }
  dec.N = static_cast<int>(dec.b.size());
  for (int n = 0; n + 1 < dec.N; ++n) dec.gap = std::min(dec.gap, dec.b[n] / dec.b[n + 1] - 1.0);
  return dec;
}

SpectralDecomposition decompose_j(const GroupSpec& spec, const Eigen::VectorXd& mu, double cluster_rel_tol) {
  if (mu.size() != spec.d2) throw ValidationError("decompose_j: mu has wrong dimension");
  if (!mu.allFinite()) throw ValidationError("decompose_j: non-finite mu");
  if (mu.norm() == 0.0) throw ValidationError("decompose_j: mu must be nonzero");
  return decompose_skew(j_matrix(spec, mu), cluster_rel_tol);
}

Eigen::Matrix4d jminus(const Eigen::Vector3d& x) {
  Eigen::Matrix4d J;
  J << 0, -x(2), -x(0), -x(1),
       x(2), 0, x(1), -x(0),
       x(0), -x(1), 0, x(2),
       x(1), x(0), -x(2), 0;
  return J;
}

Eigen::Matrix4d jplus(const Eigen::Vector3d& y) {
  Eigen::Matrix4d J;
  J << 0, -y(2), -y(0), y(1),
       y(2), 0, y(1), y(0),
       y(0), -y(1), 0, -y(2),
       -y(1), -y(0), y(2), 0;
  return J;
}

double so4_inner(const Eigen::Matrix4d& J, const Eigen::Matrix4d& Jp) { return -0.25 * (J * Jp).trace(); }

std::pair<double, double> so4_eigenvalues(const Eigen::Vector3d& xi, const Eigen::Vector3d& eta) {
  double a = xi.norm(), b = eta.norm();
  return {a + b, std::abs(a - b)};
}

std::pair<Eigen::Matrix4d, Eigen::Matrix4d> so4_projections(const Eigen::Vector3d& xi,
                                                            const Eigen::Vector3d& eta) {
  double a = xi.norm(), b = eta.norm();
  if (a == 0.0 || b == 0.0 || a == b)
    throw ValidationError("so4_projections: degenerate input (xi = 0, eta = 0 or |xi| = |eta|)");
  Eigen::Matrix4d W = (jplus(eta) / b) * (jminus(xi) / a);
  Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
  return {0.5 * I - 0.5 * W, 0.5 * I + 0.5 * W};
}

std::pair<double, double> metivier43_eigen(const Eigen::Matrix3d& A, const Eigen::Vector3d& xi) {
  return so4_eigenvalues(xi, A * xi);
}

SpectralDecomposition metivier43_decompose(const Eigen::Matrix3d& A, const Eigen::Vector3d& xi,
                                           double degenerate_rel_tol) {
  const double a = xi.norm();
  if (a == 0.0) throw ValidationError("metivier43_decompose: xi must be nonzero");
  const Eigen::Vector3d eta = A * xi;
  const double b = eta.norm();
  SpectralDecomposition dec;
  dec.P0 = Eigen::MatrixXd::Zero(4, 4);
  if (b <= degenerate_rel_tol * a) {
    dec.N = 1;
    dec.b = {a};
    dec.r = {2};
    dec.P = {Eigen::MatrixXd::Identity(4, 4)};
    return dec;
  }
  if (std::abs(a - b) <= degenerate_rel_tol * a)
    throw ValidationError("metivier43_decompose: |A xi| = |xi|, the form is degenerate at this xi");
  auto [P1, P2] = so4_projections(xi, eta);
  dec.N = 2;
  dec.b = {a + b, std::abs(a - b)};
  dec.r = {1, 1};
  dec.P = {P1, P2};
  dec.gap = dec.b[0] / dec.b[1] - 1.0;
  return dec;
}

KerAResult kerA_classify(const Eigen::Matrix3d& A, double tol) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  KerAResult r;
  const double smax = sv(0);
  if (smax == 0.0) {
    r.cls = KerClass::FULL;
    r.v = Eigen::Vector3d::UnitZ();
    r.v_is_kernel = true;
    return r;
  }
  int rank = 0;
  for (int i = 0; i < 3; ++i)
    if (sv(i) > tol * smax) ++rank;
  if (rank == 3) {
    r.cls = KerClass::ZERO;
    r.v = Eigen::Vector3d::UnitZ();
    r.v_is_kernel = false;
    return r;
  }
  r.cls = KerClass::INTERMEDIATE;
  Eigen::Vector3d v = svd.matrixV().col(2);
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0) v = -v;
  r.v = v.normalized();
  r.v_is_kernel = true;
  return r;
}

const char* to_string(KerClass c) {
  switch (c) {
    case KerClass::ZERO: return "ZERO";
    case KerClass::FULL: return "FULL";
    case KerClass::INTERMEDIATE: return "INTERMEDIATE";
  }
  return "?";
}

namespace {

double op_norm_sym(const Eigen::Matrix4d& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

DerivativeProbe mu_derivative_bounds_probe(const Eigen::Matrix3d& A, const Eigen::Vector3d& v,
                                           int samples, int max_alpha, double h1, double h2,
                                           std::uint64_t seed) {
  if (samples < 1) throw ValidationError("probe: need at least one sample");
  if (max_alpha < 1 || max_alpha > 2) throw ValidationError("probe: alpha must be 1 or 2");
  if (std::abs(v.norm() - 1.0) > 1e-12) throw ValidationError("probe: direction v must be a unit vector");
  if (!(h1 > 0.0) || !(h2 > 0.0)) throw ValidationError("probe: steps must be positive");
  DerivativeProbe out;
  const double gap_min = 1e-6;
  for (const Eigen::VectorXd& m : sphere_samples(3, samples, seed)) {
    const Eigen::Vector3d mu = m;
    const double nm = mu.norm();
    const double offs[] = {-h2, -h1, 0.0, h1, h2};
    SpectralDecomposition d[5];
    bool ok = true;
    for (int s = 0; s < 5 && ok; ++s) {
      try {
        d[s] = metivier43_decompose(A, mu + offs[s] * nm * v, 1e-12);
        if (d[s].N != d[0].N || (d[s].N == 2 && d[s].gap < gap_min)) ok = false;
      } catch (const ValidationError&) {
        ok = false;
      }
    }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    DerivativeProbeRow row{};
    row.mu = mu;
    row.N = d[2].N;
    row.b1 = d[2].b[0];
    row.b2 = d[2].N == 2 ? d[2].b[1] : d[2].b[0];
    const double dvnorm = v.dot(mu) / nm;  // d/dv |mu|
    for (int n = 0; n < d[2].N; ++n) {
      double db = (d[3].b[n] - d[1].b[n]) / (2.0 * h1 * nm);
      double d2b = (d[4].b[n] - 2.0 * d[2].b[n] + d[0].b[n]) / (h2 * nm * h2 * nm);
      Eigen::Matrix4d dP = (d[3].P[n] - d[1].P[n]) / (2.0 * h1 * nm);
      Eigen::Matrix4d d2P = (d[4].P[n] - 2.0 * d[2].P[n] + d[0].P[n]) / (h2 * nm * h2 * nm);
      double D1b = nm * db;
      double D2b = nm * (dvnorm * db + nm * d2b);
      Eigen::Matrix4d D1P = nm * dP;
      Eigen::Matrix4d D2P = nm * (dvnorm * dP + nm * d2P);
      row.Db_rel[0][n] = std::abs(D1b) / d[2].b[n];
      row.DP_op[0][n] = op_norm_sym(D1P);
      row.Db_rel[1][n] = max_alpha >= 2 ? std::abs(D2b) / d[2].b[n] : 0.0;
      row.DP_op[1][n] = max_alpha >= 2 ? op_norm_sym(D2P) : 0.0;
      for (int a = 0; a < max_alpha; ++a) {
        out.kappa_b = std::max(out.kappa_b, row.Db_rel[a][n]);
        out.kappa_P = std::max(out.kappa_P, row.DP_op[a][n]);
      }
    }
    out.table.push_back(row);
  }
  return out;
}

}  // namespace metivier
