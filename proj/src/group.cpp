#include "metivier/group.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "metivier/errors.hpp"
#include "metivier/quadrature.hpp"
#include "metivier/spectral.hpp"

namespace metivier {

void validate(const GroupSpec& spec) {
  if (spec.d1 < 1 || spec.d2 < 1) throw ValidationError("group: d1 and d2 must be positive");
  if (spec.c.size() != static_cast<std::size_t>(spec.d2) * spec.d1 * spec.d1)
    throw ValidationError("group: structure constant array has wrong size");
  for (double v : spec.c)
    if (!std::isfinite(v)) throw ValidationError("group: non-finite structure constant");
  for (int k = 0; k < spec.d2; ++k)
    for (int i = 0; i < spec.d1; ++i)
      for (int j = 0; j < spec.d1; ++j)
        if (spec.at(k, i, j) != -spec.at(k, j, i))
          throw ValidationError("group: structure constants are not antisymmetric");
  const int pairs = spec.d1 * (spec.d1 - 1) / 2;
  if (pairs < spec.d2) throw ValidationError("group: [g1,g1] cannot span g2 (too few pairs)");
  Eigen::MatrixXd M(pairs, spec.d2);
  int row = 0;
  for (int i = 0; i < spec.d1; ++i)
    for (int j = i + 1; j < spec.d1; ++j, ++row)
      for (int k = 0; k < spec.d2; ++k) M(row, k) = spec.at(k, i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10) ++rank;
  if (rank != spec.d2) throw ValidationError("group: brackets are not generating (rank of [g1,g1] < d2)");
}

GroupSpec make_group(int d1, int d2, const std::vector<StructureConstant>& entries) {
  if (d1 < 1 || d2 < 1) throw ValidationError("group: d1 and d2 must be positive");
  GroupSpec s;
  s.d1 = d1;
  s.d2 = d2;
  s.c.assign(static_cast<std::size_t>(d2) * d1 * d1, 0.0);
  std::vector<char> set(s.c.size(), 0);
  auto idx = [&](int k, int i, int j) { return (static_cast<std::size_t>(k) * d1 + i) * d1 + j; };
  for (const auto& e : entries) {
    if (e.k < 0 || e.k >= d2 || e.i < 0 || e.i >= d1 || e.j < 0 || e.j >= d1)
      throw ValidationError("group: structure constant index out of range");
    if (!std::isfinite(e.v)) throw ValidationError("group: non-finite structure constant");
    if (e.i == e.j) {
      if (e.v != 0.0) throw ValidationError("group: diagonal structure constant must vanish");
      continue;
    }
    auto a = idx(e.k, e.i, e.j), b = idx(e.k, e.j, e.i);
    if (set[a] && s.c[a] != e.v) throw ValidationError("group: conflicting structure constants");
    if (set[b] && s.c[b] != -e.v) throw ValidationError("group: structure constants violate antisymmetry");
    s.c[a] = e.v;
    s.c[b] = -e.v;
    set[a] = set[b] = 1;
  }
  validate(s);
  return s;
}

Eigen::MatrixXd j_matrix(const GroupSpec& spec, const Eigen::VectorXd& mu) {
  if (mu.size() != spec.d2) throw ValidationError("j_matrix: mu has wrong dimension");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(spec.d1, spec.d1);
  for (int k = 0; k < spec.d2; ++k) {
    if (mu(k) == 0.0) continue;
    for (int i = 0; i < spec.d1; ++i)
      for (int j = 0; j < spec.d1; ++j) J(j, i) += mu(k) * spec.at(k, i, j);
  }
  return J;
}

Eigen::VectorXd bracket(const GroupSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
  if (x.size() != spec.d1 || xp.size() != spec.d1) throw ValidationError("bracket: dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.d2);
  for (int k = 0; k < spec.d2; ++k) {
    double s = 0.0;
    for (int i = 0; i < spec.d1; ++i)
      for (int j = 0; j < spec.d1; ++j) s += spec.at(k, i, j) * x(i) * xp(j);
    out(k) = s;
  }
  return out;
}

void check_point(const GroupSpec& spec, const Point& p) {
  if (p.x.size() != spec.d1 || p.u.size() != spec.d2) throw ValidationError("point: dimension mismatch");
  if (!p.x.allFinite() || !p.u.allFinite()) throw ValidationError("point: non-finite coordinate");
}

Point group_multiply(const GroupSpec& spec, const Point& p, const Point& q) {
  check_point(spec, p);
  check_point(spec, q);
  return {p.x + q.x, p.u + q.u + 0.5 * bracket(spec, p.x, q.x)};
}

Point group_inverse(const Point& p) { return {-p.x, -p.u}; }

Point dilate(double R, const Point& p) {
  if (!(R > 0.0)) throw ValidationError("dilate: R must be positive");
  return {R * p.x, R * R * p.u};
}

double homogeneous_norm(const Point& p) {
  double x2 = p.x.squaredNorm(), u2 = p.u.squaredNorm();
  return std::pow(x2 * x2 + u2, 0.25);
}

MetivierVerdict is_metivier(const GroupSpec& spec, int n_samples, double tol, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("is_metivier: n_samples must be >= 1");
  MetivierVerdict v;
  v.n_samples = n_samples;
  v.tol = tol;
  v.min_sv = std::numeric_limits<double>::infinity();
  for (const auto& mu : sphere_samples(spec.d2, n_samples, seed)) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j_matrix(spec, mu));
    double s = svd.singularValues().minCoeff();
    if (s < v.min_sv) {
      v.min_sv = s;
      v.witness_mu = mu;
    }
  }
  v.verdict = v.min_sv > tol;
  v.sampled = v.verdict;
  return v;
}

double heisenberg_type_residual(const GroupSpec& spec) {
  std::vector<Eigen::MatrixXd> Js;
  for (int k = 0; k < spec.d2; ++k) Js.push_back(j_matrix(spec, Eigen::VectorXd::Unit(spec.d2, k)));
  double res = 0.0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(spec.d1, spec.d1);
  for (int k = 0; k < spec.d2; ++k)
    for (int l = k; l < spec.d2; ++l) {
      Eigen::MatrixXd M = Js[k] * Js[l] + Js[l] * Js[k];
      if (k == l) M += 2.0 * I;
      res = std::max(res, M.cwiseAbs().maxCoeff());
    }
  return res;
}

bool is_heisenberg_type(const GroupSpec& spec, double tol) { return heisenberg_type_residual(spec) <= tol; }

GroupSpec heisenberg(int n) {
  if (n < 1) throw ValidationError("heisenberg: n must be >= 1");
  std::vector<StructureConstant> e;
  for (int i = 0; i < n; ++i) e.push_back({0, i, n + i, 1.0});
  return make_group(2 * n, 1, e);
}

GroupSpec metivier_4_3(const Eigen::Matrix3d& A) {
  if (!A.allFinite()) throw ValidationError("metivier_4_3: non-finite A");
  GroupSpec s;
  s.d1 = 4;
  s.d2 = 3;
  s.c.assign(3 * 16, 0.0);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
    Eigen::Matrix4d M = jminus(e) + jplus(A * e);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) s.at(k, i, j) = M(j, i);
  }
  validate(s);
  return s;
}

}  // namespace metivier
