#include <cmath>
#include <set>

#include "doctest.h"
#include "metivier/errors.hpp"
#include "metivier/numerology.hpp"

using namespace metivier;

TEST_CASE("rational arithmetic is exact and reduced") {
  Rational a(6, -8);
  CHECK(a.num() == -3);
  CHECK(a.den() == 4);
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
  CHECK(Rational(1, 2) / Rational(1, 4) == Rational(2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(parse_rational("17/12") == Rational(17, 12));
  CHECK(parse_rational("-4") == Rational(-4));
  CHECK_THROWS_AS(parse_rational("1/"), ValidationError);
  CHECK_THROWS_AS(parse_rational("1/0"), ValidationError);
  CHECK_THROWS_AS(parse_rational("x"), ValidationError);
}

TEST_CASE("Radon-Hurwitz numbers") {
  CHECK(radon_hurwitz(4) == 4);
  CHECK(radon_hurwitz(8) == 8);
  CHECK(radon_hurwitz(16) == 9);
  // classical values for powers of two
  const int table[] = {1, 2, 4, 8, 9, 10, 12, 16, 17, 18, 20, 24};
  for (int b = 0; b < 12; ++b) CHECK(radon_hurwitz(1 << b) == table[b]);
  for (int n = 1; n <= 4096; ++n) {
    if (n % 2 == 1) CHECK(radon_hurwitz(n) == 1);
    CHECK(radon_hurwitz(n) <= 2.0 * std::log2(n) + 2.0);
    // odd factors do not matter
    CHECK(radon_hurwitz(3 * n) == radon_hurwitz(n));
  }
  CHECK_THROWS_AS(radon_hurwitz(0), ValidationError);
}

TEST_CASE("admissibility, exceptional pairs, three-halves inequality") {
  CHECK(admissible(4, 3));
  CHECK(admissible(2, 1));
  CHECK_FALSE(admissible(4, 4));
  CHECK(is_exceptional(4, 3));
  CHECK(is_exceptional(8, 6));
  CHECK_FALSE(three_halves_holds(4, 3));
  CHECK_FALSE(is_exceptional(6, 1));
  CHECK(three_halves_holds(6, 1));

  std::set<std::pair<int, int>> failing;
  for (int d1 = 1; d1 <= 64; ++d1)
    for (int d2 = 1; d2 < radon_hurwitz(d1); ++d2) {
      REQUIRE(admissible(d1, d2));
      if (!three_halves_holds(d1, d2)) failing.insert({d1, d2});
      CHECK(three_halves_holds(d1, d2) == !is_exceptional(d1, d2));
    }
  CHECK(failing == std::set<std::pair<int, int>>{{4, 3}, {8, 6}, {8, 7}});
}

TEST_CASE("exponents and thresholds") {
  CHECK(stein_tomas(3) == Rational(4, 3));
  CHECK(stein_tomas(6) == Rational(14, 9));
  CHECK(stein_tomas(7) == Rational(8, 5));
  CHECK(p_threshold(4, 3) == Rational(4, 3));
  CHECK(p_threshold(8, 6) == Rational(17, 12));
  CHECK(p_threshold(8, 7) == Rational(14, 11));
  CHECK(p_threshold(4, 2) == Rational(6, 5));
  CHECK_THROWS_AS(p_threshold(10, 2), ValidationError);
  CHECK(bar_p_threshold(4, 3) == Rational(6, 5));
  CHECK(bar_p_threshold(8, 7) == Rational(14, 11));
  CHECK(bar_p_threshold(8, 2) == Rational(6, 5));
  CHECK_THROWS_AS(bar_p_threshold(6, 2), ValidationError);
  CHECK_THROWS_AS(p_threshold(4, 4), ValidationError);
  CHECK_THROWS_AS(bar_p_threshold(2, 2), ValidationError);

  CHECK(condition_iii_threshold(4, 3) == Rational(6, 5));
  CHECK(condition_iii_threshold(8, 6) == Rational(17, 12));
  CHECK(condition_iii_threshold(8, 7) == Rational(14, 11));
  for (auto [d1, d2] : {std::pair{4, 3}, std::pair{8, 6}, std::pair{8, 7}})
    CHECK(condition_iii_threshold(d1, d2) <= p_threshold(d1, d2));
  CHECK(condition_iii_threshold(8, 6) == p_threshold(8, 6));
  CHECK(condition_iii_threshold(8, 7) == p_threshold(8, 7));

  CHECK(regularity_threshold(Rational(4, 3), 7) == Rational(7, 4));
  CHECK(theta_p(Rational(1), 2, 1) == Rational(0));  // p_{d2} = 1: only p = 1 is allowed
  CHECK(theta_p(Rational(1), 4, 3) == Rational(0));
  CHECK(theta_p(Rational(4, 3), 4, 3) == Rational(1));
  CHECK(theta_p(Rational(8, 7), 4, 3) == Rational(1, 2));
  CHECK_THROWS_AS(theta_p(Rational(3, 2), 4, 3), ValidationError);
  CHECK_THROWS_AS(theta_p(Rational(1, 2), 4, 3), ValidationError);
  // 1/p = (1 - theta) + theta / pmin, checked on a grid of p
  for (int k = 0; k <= 12; ++k) {
    Rational p = Rational(1) + Rational(k, 36);
    Rational th = theta_p(p, 4, 3);
    CHECK(Rational(1) / p == (Rational(1) - th) + th / Rational(4, 3));
  }
}
