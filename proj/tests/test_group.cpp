#include <random>

#include "doctest.h"
#include "metivier/errors.hpp"
#include "metivier/group.hpp"
#include "metivier/spectral.hpp"

using namespace metivier;

namespace {

GroupSpec random_group(std::mt19937_64& rng, int d1, int d2) {
  std::normal_distribution<double> N;
  for (;;) {
    std::vector<StructureConstant> e;
    for (int k = 0; k < d2; ++k)
      for (int i = 0; i < d1; ++i)
        for (int j = i + 1; j < d1; ++j) e.push_back({k, i, j, N(rng)});
    try {
      return make_group(d1, d2, e);
    } catch (const ValidationError&) {
    }
  }
}

Point random_point(std::mt19937_64& rng, const GroupSpec& s) {
  std::normal_distribution<double> N;
  Point p{Eigen::VectorXd(s.d1), Eigen::VectorXd(s.d2)};
  for (int i = 0; i < s.d1; ++i) p.x(i) = N(rng);
  for (int i = 0; i < s.d2; ++i) p.u(i) = N(rng);
  return p;
}

}  // namespace

TEST_CASE("j_matrix on the Heisenberg group") {
  GroupSpec h = heisenberg(1);
  Eigen::MatrixXd J = j_matrix(h, Eigen::VectorXd::Constant(1, 1.0));
  CHECK((-J * J - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK(J(1, 0) == 1.0);
  CHECK(J(0, 1) == -1.0);
  CHECK(j_matrix(h, Eigen::VectorXd::Zero(1)).norm() == 0.0);
  CHECK_THROWS_AS(j_matrix(h, Eigen::VectorXd::Zero(2)), ValidationError);
}

TEST_CASE("metivier_4_3 realizes J-(xi) + J+(A xi)") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 9; ++i) A(i) = N(rng);
    Eigen::Vector3d xi(N(rng), N(rng), N(rng));
    GroupSpec g = metivier_4_3(A);
    Eigen::MatrixXd J = j_matrix(g, xi);
    Eigen::Matrix4d ref = jminus(xi) + jplus(A * xi);
    CHECK((J - ref).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + ref.norm()));
  }
  GroupSpec g0 = metivier_4_3(Eigen::Matrix3d::Zero());
  Eigen::Vector3d xi(0.3, -1.2, 0.5);
  Eigen::MatrixXd J = j_matrix(g0, xi);
  CHECK((J - Eigen::MatrixXd(jminus(xi))).norm() == 0.0);
  CHECK((-J * J - xi.squaredNorm() * Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("j_matrix is linear and skew") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 40; ++trial) {
    int d1 = 2 + trial % 5, d2 = 1 + trial % 3;
    if (d1 * (d1 - 1) / 2 < d2) continue;
    GroupSpec g = random_group(rng, d1, d2);
    Eigen::VectorXd mu(d2), nu(d2);
    for (int k = 0; k < d2; ++k) mu(k) = N(rng), nu(k) = N(rng);
    double a = N(rng), b = N(rng);
    Eigen::MatrixXd lhs = j_matrix(g, a * mu + b * nu);
    Eigen::MatrixXd rhs = a * j_matrix(g, mu) + b * j_matrix(g, nu);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    Eigen::MatrixXd J = j_matrix(g, mu);
    CHECK((J + J.transpose()).norm() == 0.0);
    // <J e_i, e_j> = mu([e_i, e_j])
    for (int i = 0; i < d1; ++i)
      for (int j = 0; j < d1; ++j) {
        Eigen::VectorXd br = bracket(g, Eigen::VectorXd::Unit(d1, i), Eigen::VectorXd::Unit(d1, j));
        CHECK(J(j, i) == doctest::Approx(mu.dot(br)).epsilon(1e-14));
      }
  }
}

TEST_CASE("group law examples and axioms") {
  GroupSpec h = heisenberg(1);
  Point p{Eigen::Vector2d(1, 0), Eigen::VectorXd::Zero(1)};
  Point q{Eigen::Vector2d(0, 1), Eigen::VectorXd::Zero(1)};
  Point pq = group_multiply(h, p, q);
  CHECK(pq.x(0) == 1.0);
  CHECK(pq.x(1) == 1.0);
  CHECK(pq.u(0) == 0.5);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    GroupSpec g = trial % 2 ? metivier_4_3(Eigen::Matrix3d::Identity() * 0.3) : random_group(rng, 5, 2);
    Point a = random_point(rng, g), b = random_point(rng, g), c = random_point(rng, g);
    Point e{Eigen::VectorXd::Zero(g.d1), Eigen::VectorXd::Zero(g.d2)};
    Point l = group_multiply(g, group_multiply(g, a, b), c);
    Point r = group_multiply(g, a, group_multiply(g, b, c));
    CHECK((l.x - r.x).norm() < 1e-12);
    CHECK((l.u - r.u).norm() < 1e-12);
    Point ae = group_multiply(g, a, e);
    CHECK((ae.x - a.x).norm() == 0.0);
    CHECK((ae.u - a.u).norm() == 0.0);
    Point ai = group_multiply(g, a, group_inverse(a));
    CHECK(ai.x.norm() < 1e-12);
    CHECK(ai.u.norm() < 1e-12);
  }
}

TEST_CASE("homogeneous norm and dilations") {
  Point zero{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)};
  CHECK(homogeneous_norm(zero) == 0.0);
  Point p{Eigen::Vector2d(0.6, -0.8), Eigen::VectorXd::Zero(1)};
  CHECK(homogeneous_norm(p) == doctest::Approx(1.0).epsilon(1e-15));
  Point q{Eigen::Vector2d(1, 0), Eigen::VectorXd::Constant(1, 1.0)};
  CHECK(homogeneous_norm(dilate(2.0, q)) == doctest::Approx(2.0 * std::pow(2.0, 0.25)).epsilon(1e-15));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.1, 10.0);
  GroupSpec g = heisenberg(2);
  for (int t = 0; t < 50; ++t) {
    Point a = random_point(rng, g);
    double R = U(rng);
    CHECK(homogeneous_norm(dilate(R, a)) == doctest::Approx(R * homogeneous_norm(a)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(dilate(0.0, q), ValidationError);
  CHECK_THROWS_AS(dilate(-1.0, q), ValidationError);
}

TEST_CASE("Metivier and Heisenberg-type predicates") {
  auto v = is_metivier(heisenberg(1), 16, 1e-10);
  CHECK(v.verdict);
  CHECK(v.min_sv == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::Matrix3d A = Eigen::Vector3d(0.5, 0.5, 0.0).asDiagonal();
  auto v43 = is_metivier(metivier_4_3(A), 200, 1e-8);
  CHECK(v43.verdict);
  CHECK(v43.min_sv >= 0.5 - 1e-12);

  // H^1 x R: the third first-layer direction is central.
  GroupSpec deg = make_group(3, 1, {{0, 0, 1, 1.0}});
  auto vd = is_metivier(deg, 8, 1e-10);
  CHECK_FALSE(vd.verdict);
  CHECK(vd.witness_mu.size() == 1);
  CHECK(vd.min_sv < 1e-12);

  CHECK(is_heisenberg_type(heisenberg(1), 1e-12));
  CHECK(is_heisenberg_type(heisenberg(3), 1e-12));
  CHECK(is_heisenberg_type(metivier_4_3(Eigen::Matrix3d::Zero()), 1e-12));
  CHECK_FALSE(is_heisenberg_type(metivier_4_3(2.0 * Eigen::Matrix3d::Identity()), 1e-6));
  for (int n = 1; n <= 3; ++n) CHECK(is_metivier(heisenberg(n), 32, 1e-10).verdict);
  CHECK(is_metivier(metivier_4_3(Eigen::Matrix3d::Zero()), 64, 1e-10).verdict);
}

TEST_CASE("validation rejects malformed specs") {
  CHECK_THROWS_AS(make_group(2, 1, {{0, 0, 1, 1.0}, {0, 1, 0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(make_group(2, 1, {{0, 0, 0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(make_group(3, 2, {{0, 0, 1, 1.0}}), ValidationError);  // U_2 never reached
  CHECK_THROWS_AS(make_group(2, 2, {{0, 0, 1, 1.0}, {1, 0, 1, 1.0}}), ValidationError);
  CHECK_THROWS_AS(make_group(2, 1, {{0, 0, 5, 1.0}}), ValidationError);
  GroupSpec g = heisenberg(1);
  g.at(0, 0, 1) = 2.0;
  CHECK_THROWS_AS(validate(g), ValidationError);
}
