// Natural numbers that may be far too large to write down.
//
// A Bound is either an exact natural (kept while its decimal digit count is
// within the digit cap) or a magnitude (level l >= 1, value v) that stands
// for the definite natural ceil(exp^l(v)), where exp^l is l-fold
// exponentiation. Every operation rounds magnitude values upward, so a
// result is always >= the true value of the expression it evaluates.
#pragma once

#include "bruck/numeric.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace bruck {

// ---------------------------------------------------------------------------
// Digit cap

namespace detail {

inline std::size_t default_digit_cap() {
  if (const char* env = std::getenv("BRUCK_DIGIT_CAP")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 100000;
}

inline std::size_t& digit_cap_slot() {
  thread_local std::size_t cap = default_digit_cap();
  return cap;
}

}  // namespace detail

/// Maximum number of decimal digits kept in exact form (per thread).
inline std::size_t digit_cap() { return detail::digit_cap_slot(); }

/// Overrides the digit cap for the current thread within a scope.
class ScopedDigitCap {
 public:
  explicit ScopedDigitCap(std::size_t cap) : saved_(detail::digit_cap_slot()) {
    if (cap < 1) throw ConfigError("digit cap must be >= 1");
    detail::digit_cap_slot() = cap;
  }
  ~ScopedDigitCap() { detail::digit_cap_slot() = saved_; }
  ScopedDigitCap(const ScopedDigitCap&) = delete;
  ScopedDigitCap& operator=(const ScopedDigitCap&) = delete;

 private:
  std::size_t saved_;
};

// ---------------------------------------------------------------------------
// Provenance

/// Expression trace attached to a Bound. Shared and copy-on-write; capped
/// at kMaxNodes entries with a truncation marker.
class Provenance {
 public:
  static constexpr std::size_t kMaxNodes = 1000;

  Provenance() = default;

  Provenance appended(std::string note) const {
    Provenance p = *this;
    auto nodes = nodes_ ? std::make_shared<std::vector<std::string>>(*nodes_)
                        : std::make_shared<std::vector<std::string>>();
    if (nodes->size() < kMaxNodes - 1) {
      nodes->push_back(std::move(note));
    } else if (nodes->size() == kMaxNodes - 1) {
      nodes->push_back("... (provenance truncated)");
    }
    p.nodes_ = std::move(nodes);
    return p;
  }

  Provenance merged(const Provenance& other) const {
    Provenance p = *this;
    for (const auto& n : other.nodes()) p = p.appended(n);
    return p;
  }

  const std::vector<std::string>& nodes() const {
    static const std::vector<std::string> empty;
    return nodes_ ? *nodes_ : empty;
  }
  bool empty() const { return nodes().empty(); }

  friend bool operator==(const Provenance& a, const Provenance& b) { return a.nodes() == b.nodes(); }

 private:
  std::shared_ptr<const std::vector<std::string>> nodes_;
};

// ---------------------------------------------------------------------------
// Bound

struct Magnitude {
  std::uint64_t level = 1;
  double value = 0.0;
  friend bool operator==(const Magnitude&, const Magnitude&) = default;
};

enum class Ordering { less, equal, greater, indeterminate };

inline std::string to_string(Ordering o) {
  switch (o) {
    case Ordering::less: return "less";
    case Ordering::equal: return "equal";
    case Ordering::greater: return "greater";
    case Ordering::indeterminate: return "indeterminate";
  }
  return "?";
}

/// Relative slack used when comparing values that went through a logarithm.
inline constexpr double kCompareSlack = 1e-12;

class Bound {
 public:
  Bound() : rep_(Nat(0)) {}
  Bound(std::uint64_t n) : rep_(Nat(n)) {}  // NOLINT(google-explicit-constructor)
  Bound(int n) : rep_(Nat(n)) {             // NOLINT(google-explicit-constructor)
    if (n < 0) throw Error("Bound: negative value");
  }

  /// Exact if the digit count fits the cap, otherwise a level-1 magnitude.
  static Bound promote(const Nat& n) {
    if (n < 0) throw Error("Bound: negative value");
    Bound b;
    if (decimal_digits(n) <= digit_cap()) {
      b.rep_ = n;
      return b;
    }
    return from_log(log(Interval::of_nat(n)).upper_double(), false);
  }

  /// The natural ceil(exp(ln_value)), rounded upward; upper_only is set
  /// unless the caller knows the log is of an exact natural.
  static Bound from_log(double ln_value, bool upper_only = true) {
    return normalized(Magnitude{1, ln_value}, upper_only);
  }

  /// ceil(exp^levels(v)) for an interval v, taken at its upper end.
  static Bound exp_tower(std::uint64_t levels, const Interval& v) {
    if (levels == 0) {
      if (v.hi() < 0) return Bound(0);
      return promote_estimate(v.ceil_upper(), !v.is_exact());
    }
    return normalized(Magnitude{levels, v.upper_double()}, true);
  }

  /// ceil(exp^levels(x)) for a Bound x.
  static Bound exp_tower(std::uint64_t levels, const Bound& x) {
    if (levels == 0) return x;
    if (const Nat* n = x.exact()) {
      if (bit_length(*n) < 1000) return exp_tower(levels, Interval::of_nat(*n));
      const Bound lifted = Bound::from_log(log(Interval::of_nat(*n)).upper_double());
      return exp_tower(levels, lifted);
    }
    const Magnitude& m = *x.magnitude();
    return normalized(Magnitude{m.level + levels, m.value}, true);
  }

  /// Exact natural, flagged as an over-estimate when it came from one.
  static Bound promote_estimate(const Nat& n, bool upper_only) {
    Bound b = promote(n);
    b.upper_only_ = b.upper_only_ || upper_only;
    return b;
  }

  static Bound magnitude_of(std::uint64_t level, double value, bool upper_only = true) {
    if (level == 0) throw Error("Bound: magnitude level must be >= 1");
    return normalized(Magnitude{level, value}, upper_only);
  }

  bool is_exact() const { return std::holds_alternative<Nat>(rep_); }
  const Nat* exact() const { return std::get_if<Nat>(&rep_); }
  const Magnitude* magnitude() const { return std::get_if<Magnitude>(&rep_); }
  bool upper_only() const { return upper_only_; }
  std::uint64_t level() const { return is_exact() ? 0 : magnitude()->level; }

  std::optional<std::uint64_t> to_u64() const {
    const Nat* n = exact();
    if (!n || *n > Nat(std::numeric_limits<std::uint64_t>::max())) return std::nullopt;
    return n->convert_to<std::uint64_t>();
  }

  const Provenance& provenance() const { return provenance_; }
  Bound with_note(std::string note) const {
    Bound b = *this;
    b.provenance_ = provenance_.appended(std::move(note));
    return b;
  }
  Bound with_provenance(Provenance p) const {
    Bound b = *this;
    b.provenance_ = std::move(p);
    return b;
  }
  Bound as_upper_only(bool flag = true) const {
    Bound b = *this;
    b.upper_only_ = b.upper_only_ || flag;
    return b;
  }

  /// Human-readable summary: decimal (abbreviated when long) or the tower.
  std::string summary() const {
    if (const Nat* n = exact()) {
      std::string s = n->str();
      if (s.size() > 40) {
        return s.substr(0, 12) + "...(" + std::to_string(s.size()) + " digits)";
      }
      return s;
    }
    const Magnitude& m = *magnitude();
    std::ostringstream os;
    os.precision(17);
    os << "exp^" << m.level << "(" << m.value << ")";
    return os.str();
  }

  /// Interval enclosing ln^j of the denoted natural (lo may be -inf).
  Interval log_iterated(std::uint64_t j) const {
    if (const Nat* n = exact()) {
      Interval x = Interval::of_nat(*n);
      for (std::uint64_t i = 0; i < j && !exhausted(x); ++i) x = safe_log(x);
      return x;
    }
    const Magnitude& m = *magnitude();
    Interval x = Interval(Rational(0));
    {
      Real v = m.value;
      // the definitional ceil adds < 1, visible only for tiny values
      x = Interval::of(v, v);
    }
    if (j >= m.level) {
      for (std::uint64_t i = m.level; i < j && !exhausted(x); ++i) x = safe_log(x);
      return x;
    }
    for (std::uint64_t i = j; i < m.level; ++i) {
      if (!x.finite()) break;
      x = exp(x);
    }
    // ceil(exp(...)) is at most one above the real value
    return Interval::of(x.lo(), detail::binary(x.hi(), Real(1), true, mpfr_add));
  }

  friend bool operator==(const Bound& a, const Bound& b) {
    return a.rep_ == b.rep_ && a.upper_only_ == b.upper_only_ && a.provenance_ == b.provenance_;
  }

  /// Equality ignoring provenance.
  friend bool same_value(const Bound& a, const Bound& b) {
    return a.rep_ == b.rep_ && a.upper_only_ == b.upper_only_;
  }

  // Construction helper used by the arithmetic below: brings a magnitude
  // to canonical form and materializes it when it fits the digit cap.
  static Bound normalized(Magnitude m, bool upper_only) {
    if (std::isnan(m.value)) throw Error("Bound: NaN magnitude value");
    while (m.value > 1e300) {
      m.value = up(std::log(m.value));
      if (!std::isfinite(m.value)) throw Error("Bound: magnitude overflow");
      ++m.level;
    }
    while (m.level >= 2 && m.value < 700.0) {
      m.value = up(up(std::exp(m.value)));
      --m.level;
    }
    Bound b;
    b.upper_only_ = upper_only;
    if (m.level == 1 && m.value <= materialize_limit()) {
      if (m.value < 0) {
        b.rep_ = Nat(1);
        return b;
      }
      Real v = m.value;
      b.rep_ = ceil_nat(detail::unary(v, true, mpfr_exp));
      if (decimal_digits(std::get<Nat>(b.rep_)) <= digit_cap()) return b;
    }
    b.rep_ = m;
    return b;
  }

 private:
  static double materialize_limit() {
    return static_cast<double>(digit_cap()) * 2.302585092994046 - 3.0;
  }

  // ln of (-inf, -inf) is (-inf, -inf): the remaining logs change nothing
  static bool exhausted(const Interval& x) { return x.hi() == detail::neg_inf(); }

  static Interval safe_log(const Interval& x) {
    if (!x.finite()) {
      if (x.hi() > 0) return Interval::of(detail::neg_inf(), detail::pos_inf());
    }
    if (x.hi() <= 0) return Interval::of(detail::neg_inf(), detail::neg_inf());
    Real lo = x.lo() <= 0 ? detail::neg_inf() : detail::unary(x.lo(), false, mpfr_log);
    Real hi = detail::unary(x.hi(), true, mpfr_log);
    return Interval::of(lo, hi);
  }

  std::variant<Nat, Magnitude> rep_;
  bool upper_only_ = false;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Comparison

/// Conservative comparison; reports indeterminate when enclosures overlap.
inline Ordering compare(const Bound& a, const Bound& b) {
  if (a.is_exact() && b.is_exact()) {
    const int c = a.exact()->compare(*b.exact());
    return c < 0 ? Ordering::less : (c > 0 ? Ordering::greater : Ordering::equal);
  }
  if (!a.is_exact() && !b.is_exact() && *a.magnitude() == *b.magnitude()) return Ordering::equal;
  const std::uint64_t level = std::max(a.level(), b.level());
  Interval ia = a.log_iterated(level);
  Interval ib = b.log_iterated(level);
  auto widen = [](const Interval& x) {
    if (!x.finite()) return x;
    Real slack = abs(x.hi()) * kCompareSlack + Real(1e-300);
    return Interval::of(x.lo() - slack, x.hi() + slack);
  };
  ia = widen(ia);
  ib = widen(ib);
  if (ia.hi() < ib.lo()) return Ordering::less;
  if (ia.lo() > ib.hi()) return Ordering::greater;
  return Ordering::indeterminate;
}

inline bool definitely_le(const Bound& a, const Bound& b) {
  const Ordering o = compare(a, b);
  return o == Ordering::less || o == Ordering::equal;
}

// ---------------------------------------------------------------------------
// Arithmetic (all results are upper estimates of the true value)

namespace detail {

inline double ln_double_upper(const Bound& x) {
  const Interval l = x.log_iterated(1);
  return l.upper_double();
}

/// Result N' of a map with ln N' <= alpha * ln x + beta, for magnitude x
/// (or an exact x too large to evaluate the map on directly).
inline Bound affine_in_log(const Bound& x, double alpha, double beta) {
  if (alpha <= 0) throw Error("affine_in_log: alpha must be positive");
  if (const Nat* n = x.exact()) {
    Interval ln = log(Interval::of_nat(*n));
    Real v = detail::binary(ln.hi(), Real(alpha), true, mpfr_mul);
    v = detail::binary(v, Real(beta), true, mpfr_add);
    if (v > Real(1e300)) {
      return Bound::magnitude_of(2, up(to_double(detail::unary(v, true, mpfr_log), true)));
    }
    return Bound::from_log(to_double(v, true));
  }
  const Magnitude& m = *x.magnitude();
  if (m.level == 1) return Bound::magnitude_of(1, up(up(alpha * m.value) + beta));
  // ln^j(x) for j = 1..level, lower estimates. Below the first overflow
  // every entry is +inf, so only the top of the tower is stored.
  std::vector<double> top{m.value};  // top[k] = ln^(level-k)(x)
  while (top.size() < m.level && std::isfinite(top.back())) {
    const double e = std::exp(top.back());
    top.push_back(std::isfinite(e) ? down(e) : e);
  }
  auto ln_iter = [&](std::uint64_t j) {
    const std::uint64_t k = m.level - j;
    return k < top.size() ? top[k] : std::numeric_limits<double>::infinity();
  };
  const double x1 = ln_iter(1);
  double inner = alpha + (std::isfinite(x1) ? up(beta / x1) : 0.0);
  if (inner <= 0) inner = std::numeric_limits<double>::min();
  double delta = up(std::log(up(inner)));
  for (std::uint64_t j = 2; j < m.level && delta != 0.0; ++j) {
    const double xj = ln_iter(j);
    // negative increments are rounded up to zero here
    delta = (std::isfinite(xj) && delta > 0) ? up(delta / xj) : 0.0;
  }
  return Bound::magnitude_of(m.level, up(m.value + delta));
}

/// Bits needed to decide whether an exact result is worth materializing.
inline bool fits_cap_bits(double bits) {
  return bits * 0.30103 <= static_cast<double>(digit_cap()) + 2.0;
}

}  // namespace detail

inline Bound add(const Bound& a, const Bound& b) {
  if (a.is_exact() && b.is_exact()) {
    return Bound::promote_estimate(*a.exact() + *b.exact(), a.upper_only() || b.upper_only());
  }
  if (b.is_exact() && *b.exact() == 0) return a;
  if (a.is_exact() && *a.exact() == 0) return b;
  const Ordering o = compare(a, b);
  const Bound& big = (o == Ordering::less) ? b : a;
  const Bound& small = (o == Ordering::less) ? a : b;
  double inc = std::log(2.0);
  if (o != Ordering::indeterminate && o != Ordering::equal) {
    const double lb = detail::ln_double_upper(big);
    const double ls = detail::ln_double_upper(small);
    if (std::isfinite(lb) && std::isfinite(ls)) {
      inc = std::min(inc, up(std::log1p(up(std::exp(ls - lb)))));
    } else if (std::isinf(lb) && std::isfinite(ls)) {
      inc = 0.0;
    }
  }
  return detail::affine_in_log(big, 1.0, up(inc)).as_upper_only();
}

inline Bound mul(const Bound& a, const Bound& b) {
  if (a.is_exact() && b.is_exact()) {
    const double bits = static_cast<double>(bit_length(*a.exact()) + bit_length(*b.exact()));
    if (detail::fits_cap_bits(bits)) {
      return Bound::promote_estimate(*a.exact() * *b.exact(), a.upper_only() || b.upper_only());
    }
  }
  if ((a.is_exact() && *a.exact() == 0) || (b.is_exact() && *b.exact() == 0)) return Bound(0);
  const double la = detail::ln_double_upper(a);
  const double lb = detail::ln_double_upper(b);
  if (std::isfinite(la) && std::isfinite(lb)) return Bound::from_log(up(la + lb));
  const Ordering o = compare(a, b);
  const Bound& big = (o == Ordering::less) ? b : a;
  return detail::affine_in_log(big, 2.0, 0.0).as_upper_only();
}

inline Bound pow(const Bound& x, unsigned long k) {
  if (k == 0) return Bound(1);
  if (const Nat* n = x.exact()) {
    if (*n <= 1) return x;
    if (detail::fits_cap_bits(static_cast<double>(bit_length(*n)) * static_cast<double>(k))) {
      return Bound::promote_estimate(mp::pow(*n, static_cast<unsigned>(k)), x.upper_only());
    }
  }
  return detail::affine_in_log(x, static_cast<double>(k), 0.0).as_upper_only();
}

/// ceil(x^e) for a positive rational exponent e.
inline Bound pow_ceil(const Bound& x, const Rational& e) {
  if (e <= 0) throw Error("pow_ceil: exponent must be positive");
  if (const Nat* n = x.exact()) {
    if (*n <= 1) return x;
    const Nat& num = mp::numerator(e);
    const Nat& den = mp::denominator(e);
    const double bits = static_cast<double>(bit_length(*n));
    if (num <= 1 << 20 && den <= 1 << 20 &&
        detail::fits_cap_bits(bits * num.convert_to<double>())) {
      // smallest m with m^den >= n^num
      const Nat target = mp::pow(*n, num.convert_to<unsigned>());
      auto [root, exact] = iroot(target, den.convert_to<unsigned long>());
      return Bound::promote_estimate(exact ? root : root + 1, x.upper_only());
    }
  }
  return detail::affine_in_log(x, to_double(e, true), std::log(2.0)).as_upper_only();
}

/// x^x.
inline Bound self_pow(const Bound& x) {
  if (const Nat* n = x.exact()) {
    if (*n <= 1) return Bound(1);
    if (*n < 1000000) {
      const double bits = static_cast<double>(bit_length(*n)) * n->convert_to<double>();
      if (detail::fits_cap_bits(bits)) {
        return Bound::promote_estimate(mp::pow(*n, n->convert_to<unsigned>()), x.upper_only());
      }
    }
    // ln(x^x) = x ln x
    const Interval xi = Interval::of_nat(*n);
    const Interval l = xi * log(xi);
    if (l.hi() < Real(1e300)) return Bound::from_log(l.upper_double());
    const Interval ll = log(l);
    return Bound::magnitude_of(2, ll.upper_double());
  }
  const Magnitude& m = *x.magnitude();
  if (m.level == 1) {
    // ln ln(x^x) = ln x + ln ln x, and ln x <= v + exp(-v)
    const double ln_x = up(m.value + 1e-300);
    return Bound::magnitude_of(2, up(ln_x + up(std::log(ln_x))));
  }
  // ln^{l+1}(x^x) = ln^l(x ln x) <= ln^l(x^2)
  const Bound sq = detail::affine_in_log(x, 2.0, 0.0);
  return Bound::exp_tower(1, sq).as_upper_only();
}

/// max(a - b, 0); for magnitude operands the subtrahend is dropped.
inline Bound sub_saturating(const Bound& a, const Bound& b) {
  if (a.is_exact() && b.is_exact()) {
    const Nat d = *a.exact() - *b.exact();
    return Bound::promote_estimate(d < 0 ? Nat(0) : d, a.upper_only() || b.upper_only());
  }
  if (b.is_exact() && *b.exact() == 0) return a;
  return a.as_upper_only();
}

/// A Bound >= both arguments (the larger one when decidable).
inline Bound max(const Bound& a, const Bound& b) {
  switch (compare(a, b)) {
    case Ordering::less: return b;
    case Ordering::greater:
    case Ordering::equal: return a;
    case Ordering::indeterminate: break;
  }
  return add(a, b);
}

/// Upper estimate of ln^j(x) as a Bound (ceil of the real value).
inline Bound log_bound(const Bound& x, std::uint64_t j) {
  if (j == 0) return x;
  if (const Magnitude* m = x.magnitude(); m && m->level >= j) {
    if (m->level == j) {
      Real v = m->value;
      return Bound::promote_estimate(ceil_nat(v < 0 ? Real(0) : v), true);
    }
    return Bound::magnitude_of(m->level - j, m->value);
  }
  const Interval l = x.log_iterated(j);
  if (!l.finite() || l.hi() < 0) return Bound(0);
  return Bound::promote_estimate(l.ceil_upper(), true);
}

// ---------------------------------------------------------------------------
// JSON

/// Exact values serialize as decimal strings; estimates carry upper_only.
inline nlohmann::json to_json(const Bound& b) {
  if (const Nat* n = b.exact()) {
    if (!b.upper_only()) return n->str();
    return nlohmann::json{{"exact", n->str()}, {"upper_only", true}};
  }
  const Magnitude& m = *b.magnitude();
  return nlohmann::json{{"level", m.level}, {"value", m.value}, {"upper_only", b.upper_only()}};
}

inline Bound bound_from_json(const nlohmann::json& j) {
  if (j.is_string()) return Bound::promote(Nat(j.get<std::string>()));
  if (j.contains("exact")) {
    return Bound::promote_estimate(Nat(j.at("exact").get<std::string>()),
                                   j.value("upper_only", false));
  }
  return Bound::magnitude_of(j.at("level").get<std::uint64_t>(), j.at("value").get<double>(),
                             j.value("upper_only", true));
}

}  // namespace bruck
