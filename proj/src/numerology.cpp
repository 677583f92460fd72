#include "metivier/numerology.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>

#include "metivier/errors.hpp"

namespace metivier {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw ValidationError("rational: integer overflow");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw ValidationError("rational: integer overflow");
  return r;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw ValidationError("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  if (g == 0) g = 1;
  num_ = n / g;
  den_ = d / g;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(checked_add(checked_mul(a.num_, b.den_), checked_mul(b.num_, a.den_)),
                  checked_mul(a.den_, b.den_));
}
Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
Rational operator*(const Rational& a, const Rational& b) {
  return Rational(checked_mul(a.num_, b.num_), checked_mul(a.den_, b.den_));
}
Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw ValidationError("rational: division by zero");
  return Rational(checked_mul(a.num_, b.den_), checked_mul(a.den_, b.num_));
}
bool operator<(const Rational& a, const Rational& b) {
  return checked_mul(a.num_, b.den_) < checked_mul(b.num_, a.den_);
}

Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  auto parse_int = [&](const std::string& t, std::size_t offset) -> std::int64_t {
    if (t.empty()) throw ValidationError("rational: empty field at position " + std::to_string(offset));
    std::size_t i = 0;
    if (t[0] == '-' || t[0] == '+') i = 1;
    if (i == t.size()) throw ValidationError("rational: missing digits at position " + std::to_string(offset));
    for (std::size_t k = i; k < t.size(); ++k)
      if (!std::isdigit(static_cast<unsigned char>(t[k])))
        throw ValidationError("rational: unexpected character at position " + std::to_string(offset + k));
    try {
      return std::stoll(t);
    } catch (...) {
      throw ValidationError("rational: value out of range at position " + std::to_string(offset));
    }
  };
  if (slash == std::string::npos) return Rational(parse_int(s, 0));
  return Rational(parse_int(s.substr(0, slash), 0), parse_int(s.substr(slash + 1), slash + 1));
}

int radon_hurwitz(int n) {
  if (n < 1) throw ValidationError("radon_hurwitz: n must be >= 1");
  int b = 0;
  while (n % 2 == 0) {
    n /= 2;
    ++b;
  }
  int q = b / 4, r = b % 4;
  return (1 << r) + 8 * q;
}

bool admissible(int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw ValidationError("admissible: dimensions must be positive");
  return d2 < radon_hurwitz(d1);
}

bool is_exceptional(int d1, int d2) {
  return (d1 == 4 && d2 == 3) || (d1 == 8 && d2 == 6) || (d1 == 8 && d2 == 7);
}

bool three_halves_holds(int d1, int d2) { return 2 * d1 > 3 * d2; }

Rational stein_tomas(int n) {
  if (n < 1) throw ValidationError("stein_tomas: n must be >= 1");
  return Rational(2 * (n + 1), n + 3);
}

namespace {

void require_admissible(int d1, int d2, const char* what) {
  if (!admissible(d1, d2))
    throw ValidationError(std::string(what) + ": (" + std::to_string(d1) + "," + std::to_string(d2) +
                          ") is not an admissible Metivier pair");
}

}  // namespace

Rational p_threshold(int d1, int d2) {
  require_admissible(d1, d2, "p_threshold");
  if (d1 == 8 && d2 == 6) return Rational(17, 12);
  if (d1 == 8 && d2 == 7) return Rational(14, 11);
  return stein_tomas(d2);
}

Rational bar_p_threshold(int d1, int d2) {
  require_admissible(d1, d2, "bar_p_threshold");
  if (d1 == 4 && d2 == 3) return Rational(6, 5);
  if (d1 == 8 && d2 == 6) return Rational(17, 12);
  if (d1 == 8 && d2 == 7) return Rational(14, 11);
  return stein_tomas(d2);
}

Rational theta_p(const Rational& p, int d1, int d2) {
  Rational pmin = std::min(stein_tomas(d1), stein_tomas(d2));
  if (p < Rational(1) || p > pmin)
    throw ValidationError("theta_p: p = " + p.str() + " outside [1, " + pmin.str() + "]");
  // 1/p = (1 - theta) + theta/pmin; at p = 1 theta = 0 (also when pmin = 1, where any theta solves it)
  if (p == Rational(1)) return Rational(0);
  return (Rational(1) - Rational(1) / p) / (Rational(1) - Rational(1) / pmin);
}

Rational regularity_threshold(const Rational& p, int d) {
  if (d < 1) throw ValidationError("regularity_threshold: d must be >= 1");
  if (p < Rational(1)) throw ValidationError("regularity_threshold: p must be >= 1");
  return Rational(d) * (Rational(1) / p - Rational(1, 2));
}

Rational dual_exponent(const Rational& p) {
  if (p <= Rational(1)) throw ValidationError("dual_exponent: p must exceed 1");
  return p / (p - Rational(1));
}

Rational condition_iii_threshold(int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw ValidationError("condition_iii_threshold: dimensions must be positive");
  if (d2 == 1) throw ValidationError("condition_iii_threshold: p_1 = 1 has no finite dual exponent");
  Rational pp = dual_exponent(stein_tomas(d2));
  return (pp + Rational(2 * (d1 - d2))) / (pp + Rational(d1 - d2));
}

}  // namespace metivier
