// Number primitives shared by every module: exact naturals and rationals
// (GMP) and closed real intervals with outward (directed) rounding (MPFR).
#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace bruck {

namespace mp = boost::multiprecision;

using Nat = mp::mpz_int;
using Rational = mp::mpq_rational;
using Real = mp::mpfr_float_100;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline mpfr_rnd_t mode(bool up) { return up ? MPFR_RNDU : MPFR_RNDD; }

inline Real from_rational(const Rational& q, bool up) {
  Real r;
  mpfr_set_q(r.backend().data(), q.backend().data(), mode(up));
  return r;
}

inline Real from_nat(const Nat& n, bool up) {
  Real r;
  mpfr_set_z(r.backend().data(), n.backend().data(), mode(up));
  return r;
}

inline Real pos_inf() {
  Real r;
  mpfr_set_inf(r.backend().data(), 1);
  return r;
}

inline Real neg_inf() {
  Real r;
  mpfr_set_inf(r.backend().data(), -1);
  return r;
}

template <class Fn>
Real unary(const Real& x, bool up, Fn fn) {
  Real r;
  fn(r.backend().data(), x.backend().data(), mode(up));
  return r;
}

template <class Fn>
Real binary(const Real& x, const Real& y, bool up, Fn fn) {
  Real r;
  fn(r.backend().data(), x.backend().data(), y.backend().data(), mode(up));
  return r;
}

}  // namespace detail

/// Exact value of a finite MPFR number.
inline Rational to_rational(const Real& x) {
  if (!mpfr_number_p(x.backend().data())) throw Error("to_rational: non-finite value");
  if (mpfr_zero_p(x.backend().data())) return Rational(0);
  Nat mant;
  const mpfr_exp_t e = mpfr_get_z_2exp(mant.backend().data(), x.backend().data());
  Rational q(mant);
  if (e >= 0) {
    q *= Rational(Nat(1) << static_cast<unsigned>(e));
  } else {
    q /= Rational(Nat(1) << static_cast<unsigned>(-e));
  }
  return q;
}

inline double to_double(const Real& x, bool up) {
  return mpfr_get_d(x.backend().data(), detail::mode(up));
}

inline double to_double(const Rational& q, bool up) {
  return to_double(detail::from_rational(q, up), up);
}

inline Nat ceil_nat(const Rational& q) {
  Nat num = mp::numerator(q);
  Nat den = mp::denominator(q);
  Nat quot = num / den;
  if (quot * den < num) quot += 1;
  return quot;
}

inline Nat floor_nat(const Rational& q) {
  Nat num = mp::numerator(q);
  Nat den = mp::denominator(q);
  Nat quot = num / den;
  if (quot * den > num) quot -= 1;
  return quot;
}

inline Nat ceil_nat(const Real& x) {
  if (!mpfr_number_p(x.backend().data())) throw Error("ceil_nat: non-finite value");
  Real c;
  mpfr_ceil(c.backend().data(), x.backend().data());
  Nat n;
  mpfr_get_z(n.backend().data(), c.backend().data(), MPFR_RNDU);
  return n;
}

inline bool is_integer(const Rational& q) { return mp::denominator(q) == 1; }

/// Floor of the k-th root of a natural, plus whether the root is exact.
inline std::pair<Nat, bool> iroot(const Nat& x, unsigned long k) {
  if (x < 0) throw Error("iroot: negative argument");
  Nat r;
  const int exact = mpz_root(r.backend().data(), x.backend().data(), k);
  return {r, exact != 0};
}

inline std::size_t decimal_digits(const Nat& n) {
  // mpz_sizeinbase may overshoot by one
  std::size_t d = mpz_sizeinbase(n.backend().data(), 10);
  if (d > 1 && mp::abs(n) < mp::pow(Nat(10), static_cast<unsigned>(d - 1))) --d;
  return d;
}

inline std::size_t bit_length(const Nat& n) {
  return n == 0 ? 0 : mpz_sizeinbase(n.backend().data(), 2);
}

/// Parses "3", "-0.25", "1/3", "2.5e-3" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto fail = [&] { throw ConfigError("not a rational number: '" + s + "'"); };
  if (s.empty()) fail();
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Rational a = parse_rational(s.substr(0, slash));
    Rational b = parse_rational(s.substr(slash + 1));
    if (b == 0) fail();
    return a / b;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  Nat mantissa = 0;
  long scale = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; pos < s.size(); ++pos) {
    const char c = s[pos];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      any_digit = true;
      if (seen_point) --scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) fail();
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') fail();
    ++pos;
    std::size_t used = 0;
    long exponent = 0;
    try {
      exponent = std::stol(s.substr(pos), &used);
    } catch (const std::exception&) {
      fail();
    }
    if (used != s.size() - pos || std::labs(exponent) > 100000) fail();
    scale += exponent;
  }
  Rational q(mantissa);
  const Nat ten_pow = mp::pow(Nat(10), static_cast<unsigned>(std::labs(scale)));
  if (scale >= 0) {
    q *= Rational(ten_pow);
  } else {
    q /= Rational(ten_pow);
  }
  return negative ? -q : q;
}

inline std::string to_string(const Rational& q) {
  if (is_integer(q)) return mp::numerator(q).str();
  return mp::numerator(q).str() + "/" + mp::denominator(q).str();
}

/// Closed interval [lo, hi] of reals with outward rounding on every
/// operation. When the value is known exactly as a rational it is carried
/// alongside so that ceilings at integer breakpoints stay exact.
class Interval {
 public:
  Interval() : Interval(Rational(0)) {}
  explicit Interval(const Rational& q)
      : lo_(detail::from_rational(q, false)), hi_(detail::from_rational(q, true)), exact_(q) {}
  explicit Interval(long v) : Interval(Rational(v)) {}

  static Interval of(Real lo, Real hi) {
    if (lo > hi) std::swap(lo, hi);
    Interval r;
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    r.exact_.reset();
    return r;
  }
  static Interval of_nat(const Nat& n) { return Interval(Rational(n)); }

  const Real& lo() const { return lo_; }
  const Real& hi() const { return hi_; }
  const std::optional<Rational>& exact() const { return exact_; }
  bool is_exact() const { return exact_.has_value(); }
  bool finite() const {
    return mpfr_number_p(lo_.backend().data()) && mpfr_number_p(hi_.backend().data());
  }

  Rational lower_rational() const { return exact_ ? *exact_ : to_rational(lo_); }
  Rational upper_rational() const { return exact_ ? *exact_ : to_rational(hi_); }
  double lower_double() const { return to_double(lo_, false); }
  double upper_double() const { return to_double(hi_, true); }
  double approx() const { return 0.5 * (lower_double() + upper_double()); }
  double width() const { return to_double(detail::binary(hi_, lo_, true, mpfr_sub), true); }

  /// Smallest natural guaranteed to be >= every point of the interval.
  Nat ceil_upper() const {
    if (exact_) return ceil_nat(*exact_);
    return ceil_nat(hi_);
  }

  Interval operator-() const {
    if (exact_) return Interval(-*exact_);
    return of(-hi_, -lo_);
  }

  friend Interval operator+(const Interval& a, const Interval& b) {
    if (a.exact_ && b.exact_) return Interval(*a.exact_ + *b.exact_);
    return of(detail::binary(a.lo_, b.lo_, false, mpfr_add),
              detail::binary(a.hi_, b.hi_, true, mpfr_add));
  }
  friend Interval operator-(const Interval& a, const Interval& b) {
    if (a.exact_ && b.exact_) return Interval(*a.exact_ - *b.exact_);
    return of(detail::binary(a.lo_, b.hi_, false, mpfr_sub),
              detail::binary(a.hi_, b.lo_, true, mpfr_sub));
  }
  friend Interval operator*(const Interval& a, const Interval& b) {
    if (a.exact_ && b.exact_) return Interval(*a.exact_ * *b.exact_);
    const Real* xs[2] = {&a.lo_, &a.hi_};
    const Real* ys[2] = {&b.lo_, &b.hi_};
    Real lo = detail::pos_inf();
    Real hi = detail::neg_inf();
    for (const Real* x : xs) {
      for (const Real* y : ys) {
        Real d = detail::binary(*x, *y, false, mpfr_mul);
        Real u = detail::binary(*x, *y, true, mpfr_mul);
        if (d < lo) lo = d;
        if (u > hi) hi = u;
      }
    }
    return of(lo, hi);
  }
  friend Interval operator/(const Interval& a, const Interval& b) {
    if (b.lo_ <= 0 && b.hi_ >= 0) throw Error("interval division by an interval containing zero");
    if (a.exact_ && b.exact_) return Interval(*a.exact_ / *b.exact_);
    Interval inv = of(detail::binary(Real(1), b.hi_, false, mpfr_div),
                      detail::binary(Real(1), b.lo_, true, mpfr_div));
    return a * inv;
  }

  friend Interval max(const Interval& a, const Interval& b) {
    if (a.exact_ && b.exact_) return Interval(*a.exact_ >= *b.exact_ ? *a.exact_ : *b.exact_);
    if (a.exact_ && a.lo_ >= b.hi_) return a;
    if (b.exact_ && b.lo_ >= a.hi_) return b;
    return of(a.lo_ > b.lo_ ? a.lo_ : b.lo_, a.hi_ > b.hi_ ? a.hi_ : b.hi_);
  }
  friend Interval min(const Interval& a, const Interval& b) { return -max(-a, -b); }

  friend Interval exp(const Interval& x) {
    if (x.exact_ && *x.exact_ == 0) return Interval(1L);
    return of(detail::unary(x.lo_, false, mpfr_exp), detail::unary(x.hi_, true, mpfr_exp));
  }
  friend Interval expm1(const Interval& x) {
    if (x.exact_ && *x.exact_ == 0) return Interval(0L);
    return of(detail::unary(x.lo_, false, mpfr_expm1), detail::unary(x.hi_, true, mpfr_expm1));
  }
  friend Interval log(const Interval& x) {
    if (x.lo_ <= 0) throw Error("interval log of a non-positive argument");
    if (x.exact_ && *x.exact_ == 1) return Interval(0L);
    return of(detail::unary(x.lo_, false, mpfr_log), detail::unary(x.hi_, true, mpfr_log));
  }
  friend Interval sqrt(const Interval& x) { return pow(x, Rational(1, 2)); }

  /// x^e for x > 0 (or x >= 0 with e > 0). Exact whenever the result is
  /// rational: integer exponents, or roots of perfect powers.
  friend Interval pow(const Interval& x, const Rational& e) {
    if (e == 0) return Interval(1L);
    if (x.exact_) {
      const Rational& base = *x.exact_;
      const Nat& p = mp::numerator(e);
      const Nat& q = mp::denominator(e);
      if (q <= 64 && mp::abs(p) <= 4096 && (base > 0 || (base == 0 && e > 0))) {
        const auto qq = static_cast<unsigned long>(q);
        auto [rn, en] = iroot(mp::numerator(base), qq);
        auto [rd, ed] = iroot(mp::denominator(base), qq);
        if (en && ed) {
          Rational root(rn, rd);
          const auto pp = static_cast<unsigned>(mp::abs(p));
          Rational r = mp::pow(mp::numerator(root), pp);
          r /= Rational(mp::pow(mp::denominator(root), pp));
          if (p < 0) {
            if (r == 0) throw Error("interval pow: zero to a negative power");
            r = 1 / r;
          }
          return Interval(r);
        }
      }
    }
    if (x.lo_ < 0 || (x.lo_ == 0 && e < 0)) throw Error("interval pow: base outside domain");
    if (x.lo_ == 0) {
      Interval upper = exp(Interval(e) * log(of(x.hi_, x.hi_)));
      return of(Real(0), upper.hi_);
    }
    return exp(Interval(e) * log(x));
  }

 private:
  Real lo_;
  Real hi_;
  std::optional<Rational> exact_;
};

/// Double arithmetic nudged one ulp upward (or downward); used for
/// magnitude values where a few ulps of over-estimate are harmless.
inline double up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
inline double down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

}  // namespace bruck
