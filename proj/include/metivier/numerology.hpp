#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace metivier {

// Exact rational on int64; always reduced with positive denominator.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
  Rational(std::int64_t n, std::int64_t d);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend bool operator<(const Rational& a, const Rational& b);
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Parses "a", "a/b".
Rational parse_rational(const std::string& s);

int radon_hurwitz(int n);
bool admissible(int d1, int d2);
bool is_exceptional(int d1, int d2);
bool three_halves_holds(int d1, int d2);

Rational stein_tomas(int n);
Rational p_threshold(int d1, int d2);
Rational bar_p_threshold(int d1, int d2);
Rational theta_p(const Rational& p, int d1, int d2);
Rational regularity_threshold(const Rational& p, int d);
Rational condition_iii_threshold(int d1, int d2);
Rational dual_exponent(const Rational& p);

}  // namespace metivier
