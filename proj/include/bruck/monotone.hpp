// Monotone maps on the naturals, evaluated at Bound arguments, and the
// counterfunction type built on top of them.
#pragma once

#include "bruck/magnitude.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bruck {

/// Growth envelope: F(n) <= exp(ln_coef) * n^degree for every n >= 1.
struct Envelope {
  double degree = 1.0;
  double ln_coef = 0.0;

  static Envelope constant(const Nat& k) {
    const double v = k <= 1 ? 0.0 : log(Interval::of_nat(k)).upper_double();
    return {0.0, v};
  }
  static Envelope shift(const Nat& a) {
    return {1.0, log(Interval::of_nat(a + 1)).upper_double()};
  }

  /// Envelope of F + G.
  friend Envelope operator+(const Envelope& f, const Envelope& g) {
    const double hi = std::max(f.ln_coef, g.ln_coef);
    const double lo = std::min(f.ln_coef, g.ln_coef);
    return {std::max(f.degree, g.degree), up(hi + up(std::log1p(up(std::exp(lo - hi)))))};
  }

  /// Envelope of F(G(n)) for monotone F.
  static Envelope compose(const Envelope& f, const Envelope& g) {
    return {f.degree * g.degree, up(f.ln_coef + up(f.degree * std::max(g.ln_coef, 0.0)))};
  }
};

inline std::optional<Envelope> sum_env(const std::optional<Envelope>& a,
                                       const std::optional<Envelope>& b) {
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

inline std::optional<Envelope> compose_env(const std::optional<Envelope>& f,
                                           const std::optional<Envelope>& g) {
  if (!f || !g) return std::nullopt;
  return Envelope::compose(*f, *g);
}

// ---------------------------------------------------------------------------
// MonotoneMap: the strictly increasing subsequence maps used by the packs.

class MonotoneMap {
 public:
  enum class Kind { affine, power, power_ceil, self_power };

  /// n -> a*n + b with a >= 1.
  static MonotoneMap affine(Nat a, Nat b) {
    if (a < 1 || b < 0) throw ConfigError("affine map needs a >= 1 and b >= 0");
    MonotoneMap m(Kind::affine);
    m.a_ = std::move(a);
    m.b_ = std::move(b);
    return m;
  }

  /// n -> n^k with k >= 1.
  static MonotoneMap power(unsigned k) {
    if (k < 1) throw ConfigError("power map needs k >= 1");
    MonotoneMap m(Kind::power);
    m.k_ = k;
    return m;
  }

  /// n -> ceil(n^e) for a rational e >= 1 (integer e collapses to power).
  static MonotoneMap power_ceil(const Rational& e) {
    if (e < 1) throw ConfigError("power_ceil map needs exponent >= 1");
    if (is_integer(e) && mp::numerator(e) <= 4096) {
      return power(mp::numerator(e).convert_to<unsigned>());
    }
    if (mp::numerator(e) > (1 << 20) || mp::denominator(e) > (1 << 20)) {
      throw ConfigError("power_ceil exponent has too large a numerator or denominator");
    }
    MonotoneMap m(Kind::power_ceil);
    m.e_ = e;
    return m;
  }

  /// n -> n^n (with 0^0 = 1).
  static MonotoneMap self_power() { return MonotoneMap(Kind::self_power); }

  Kind kind() const { return kind_; }

  std::string describe() const {
    switch (kind_) {
      case Kind::affine: return "affine(" + a_.str() + "," + b_.str() + ")";
      case Kind::power: return "n^" + std::to_string(k_);
      case Kind::power_ceil: return "ceil(n^(" + to_string(e_) + "))";
      case Kind::self_power: return "n^n";
    }
    return "?";
  }

  Nat operator()(const Nat& n) const {
    if (n < 0) throw Error("monotone map at a negative argument");
    switch (kind_) {
      case Kind::affine: return a_ * n + b_;
      case Kind::power: return mp::pow(n, k_);
      case Kind::power_ceil: {
        const auto num = mp::numerator(e_).convert_to<unsigned>();
        const auto den = mp::denominator(e_).convert_to<unsigned long>();
        auto [root, exact] = iroot(mp::pow(n, num), den);
        return exact ? root : root + 1;
      }
      case Kind::self_power:
        if (n == 0) return Nat(1);
        if (n > 10000000) throw Error("n^n too large to materialize");
        return mp::pow(n, n.convert_to<unsigned>());
    }
    return Nat(0);
  }

  Bound operator()(const Bound& n) const {
    switch (kind_) {
      case Kind::affine:
        if (n.is_exact()) return Bound::promote_estimate(a_ * *n.exact() + b_, n.upper_only());
        // ln(a n + b) <= ln n + ln(a + b) for n >= 1
        return detail::affine_in_log(n, 1.0, log(Interval::of_nat(a_ + b_)).upper_double())
            .as_upper_only();
      case Kind::power: return pow(n, k_);
      case Kind::power_ceil: return pow_ceil(n, e_);
      case Kind::self_power:
        if (n.is_exact() && *n.exact() == 0) return Bound(1);
        return self_pow(n);
    }
    return Bound(0);
  }

  Nat at_zero() const { return (*this)(Nat(0)); }

  /// Enclosure of ln f(n) for n >= 1 without materializing f(n).
  Interval log_at(const Nat& n) const {
    if (n < 1) throw Error("log_at needs n >= 1");
    const Interval ln = log(Interval::of_nat(n));
    switch (kind_) {
      case Kind::affine: return log(Interval::of_nat(a_ * n + b_));
      case Kind::power: return Interval(static_cast<long>(k_)) * ln;
      case Kind::power_ceil: {
        // n^e <= ceil(n^e) < n^e + 1, and ln(y + 1) <= ln y + 1/y
        const Interval x = Interval(e_) * ln;
        const Interval tail = exp(-Interval::of(x.lo(), x.lo()));
        return Interval::of(x.lo(), (x + tail).hi());
      }
      case Kind::self_power: return Interval::of_nat(n) * ln;
    }
    return ln;
  }

  /// max{n >= 0 : f(n) <= k}.
  Nat star(const Nat& k) const {
    check_star_domain(k);
    switch (kind_) {
      case Kind::affine: return floor_nat(Rational(k - b_, a_));
      case Kind::power: return iroot(k, k_).first;
      case Kind::power_ceil: {
        // ceil(n^e) <= k  iff  n^e <= k  iff  n^num <= k^den
        const auto num = mp::numerator(e_).convert_to<unsigned long>();
        const auto den = mp::denominator(e_).convert_to<unsigned>();
        return iroot(mp::pow(k, den), num).first;
      }
      case Kind::self_power: return star_reference(k);
    }
    return Nat(0);
  }

  /// Doubling plus binary search on f; kept as the reference for star().
  Nat star_reference(const Nat& k) const {
    check_star_domain(k);
    Nat lo = 0;
    Nat hi = 1;
    while (fits((*this).eval_guarded(hi), k)) {
      lo = hi;
      hi *= 2;
    }
    // f(lo) <= k < f(hi)
    while (hi - lo > 1) {
      const Nat mid = (lo + hi) / 2;
      if (fits(eval_guarded(mid), k)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  /// Upper estimate of k* for a Bound argument.
  Bound star(const Bound& k) const {
    if (const Nat* n = k.exact()) return Bound::promote_estimate(star(*n), k.upper_only());
    switch (kind_) {
      case Kind::affine: return k.as_upper_only();
      case Kind::power: return detail::affine_in_log(k, 1.0 / k_ * (1 + 1e-15), 0.0).as_upper_only();
      case Kind::power_ceil:
        return detail::affine_in_log(k, up(1.0 / to_double(e_, false)), 0.0).as_upper_only();
      case Kind::self_power:
        // n^n <= K forces n <= ln K
        return log_bound(k, 1).as_upper_only();
    }
    return k;
  }

  std::optional<Envelope> envelope() const {
    switch (kind_) {
      case Kind::affine: return Envelope{1.0, log(Interval::of_nat(a_ + b_)).upper_double()};
      case Kind::power: return Envelope{static_cast<double>(k_), 0.0};
      case Kind::power_ceil: return Envelope{to_double(e_, true), up(std::log(2.0))};
      case Kind::self_power: return std::nullopt;
    }
    return std::nullopt;
  }

  /// Envelope of k -> k*: k* <= k always, and k* <= k^(1/e) for powers.
  Envelope star_envelope() const {
    switch (kind_) {
      case Kind::power: return {1.0 / k_ * (1 + 1e-15), 0.0};
      case Kind::power_ceil: return {up(1.0 / to_double(e_, false)), 0.0};
      default: return {1.0, 0.0};
    }
  }

 private:
  explicit MonotoneMap(Kind k) : kind_(k) {}

  void check_star_domain(const Nat& k) const {
    if (k < at_zero()) throw Error("k* undefined: k = " + k.str() + " is below f(0)");
  }

  // f(n), or nullopt once the value certainly exceeds any sensible k.
  std::optional<Nat> eval_guarded(const Nat& n) const {
    if (kind_ == Kind::self_power && n > 1000000) return std::nullopt;
    return (*this)(n);
  }
  static bool fits(const std::optional<Nat>& v, const Nat& k) { return v && *v <= k; }

  Kind kind_;
  Nat a_ = 1;
  Nat b_ = 0;
  unsigned k_ = 1;
  Rational e_ = 1;
};

// ---------------------------------------------------------------------------
// Counterfunction

/// A total function N -> N evaluated at Bound arguments.
///
/// `monotone` means n -> g(n) is nondecreasing; `window_monotone` means
/// n -> n + g(n) is nondecreasing. The transforms used by the rate
/// functionals preserve the second property, which is what makes magnitude
/// evaluation at upper estimates sound.
class Counterfunction {
 public:
  using Eval = std::function<Bound(const Bound&)>;
  using Fast = std::function<std::optional<std::uint64_t>(std::uint64_t)>;

  struct Traits {
    bool monotone = false;
    bool window_monotone = false;
    std::optional<Envelope> envelope;
  };

  Counterfunction(std::string descriptor, Eval eval, Traits traits, Fast fast = {})
      : descriptor_(std::move(descriptor)),
        eval_(std::move(eval)),
        traits_(std::move(traits)),
        fast_(std::move(fast)) {
    if (traits_.monotone) traits_.window_monotone = true;
  }

  const std::string& descriptor() const { return descriptor_; }
  bool monotone() const { return traits_.monotone; }
  bool window_monotone() const { return traits_.window_monotone; }
  const std::optional<Envelope>& envelope() const { return traits_.envelope; }
  const Traits& traits() const { return traits_; }
  bool has_fast_path() const { return static_cast<bool>(fast_); }

  Bound operator()(const Bound& n) const {
    if (fast_) {
      if (auto u = n.to_u64()) {
        if (auto r = fast_(*u)) return Bound(*r);
      }
    }
    return eval_(n);
  }

  /// Fast 64-bit evaluation; nullopt when the value does not fit.
  std::optional<std::uint64_t> try_at(std::uint64_t n) const {
    if (fast_) {
      if (auto r = fast_(n)) return r;
    }
    return eval_(Bound(n)).to_u64();
  }

  std::uint64_t at(std::uint64_t n) const {
    auto r = try_at(n);
    if (!r) throw Error("counterfunction '" + descriptor_ + "' value at " + std::to_string(n) +
                        " exceeds 64 bits");
    return *r;
  }

  // Leaves ------------------------------------------------------------------

  static Counterfunction constant(const Nat& k) {
    auto fast_value = k <= Nat(std::numeric_limits<std::uint64_t>::max())
                          ? std::optional<std::uint64_t>(k.convert_to<std::uint64_t>())
                          : std::nullopt;
    Fast fast;
    if (fast_value) fast = [v = *fast_value](std::uint64_t) { return std::optional(v); };
    return Counterfunction("const " + k.str(),
                           [k](const Bound&) { return Bound::promote(k); },
                           {true, true, Envelope::constant(k)}, fast);
  }

  static Counterfunction identity() {
    return Counterfunction("id", [](const Bound& n) { return n; }, {true, true, Envelope{1.0, 0.0}},
                           [](std::uint64_t n) { return std::optional(n); });
  }

  static Counterfunction successor() { return affine(1, 1); }

  /// n -> a*n + b.
  static Counterfunction affine(const Nat& a, const Nat& b) {
    if (a < 0 || b < 0) throw ConfigError("affine counterfunction needs a, b >= 0");
    Fast fast;
    if (a <= Nat(std::numeric_limits<std::uint64_t>::max()) &&
        b <= Nat(std::numeric_limits<std::uint64_t>::max())) {
      fast = [aa = a.convert_to<std::uint64_t>(),
              bb = b.convert_to<std::uint64_t>()](std::uint64_t n) -> std::optional<std::uint64_t> {
        std::uint64_t r;
        if (__builtin_mul_overflow(aa, n, &r) || __builtin_add_overflow(r, bb, &r)) {
          return std::nullopt;
        }
        return r;
      };
    }
    std::optional<Envelope> env =
        a == 0 ? Envelope::constant(b) : Envelope{1.0, log(Interval::of_nat(a + b)).upper_double()};
    return Counterfunction(
        "affine " + a.str() + " " + b.str(),
        [a, b](const Bound& n) {
          if (a == 0) return Bound::promote(b);
          return add(mul(n, Bound::promote(a)), Bound::promote(b));
        },
        {true, true, env}, fast);
  }

  /// n -> n^k.
  static Counterfunction power(unsigned k) {
    Fast fast = [k](std::uint64_t n) -> std::optional<std::uint64_t> {
      std::uint64_t r = 1;
      for (unsigned i = 0; i < k; ++i) {
        if (__builtin_mul_overflow(r, n, &r)) return std::nullopt;
      }
      return r;
    };
    return Counterfunction(
        "pow " + std::to_string(k), [k](const Bound& n) { return pow(n, k); },
        {true, true, Envelope{static_cast<double>(k), 0.0}}, fast);
  }

  /// Listed values, then the last value repeated; replaced by its running
  /// maximum so the result is monotone and bounds the raw table.
  static Counterfunction table(const std::vector<Nat>& values, std::string descriptor = "") {
    if (values.empty()) throw ConfigError("table counterfunction needs at least one value");
    std::vector<Nat> majorant(values);
    for (std::size_t i = 1; i < majorant.size(); ++i) {
      if (majorant[i] < majorant[i - 1]) majorant[i] = majorant[i - 1];
    }
    if (descriptor.empty()) {
      descriptor = "table[";
      for (std::size_t i = 0; i < values.size(); ++i) {
        descriptor += (i ? "," : "") + values[i].str();
      }
      descriptor += "]";
    }
    const Nat top = majorant.back();
    auto shared = std::make_shared<const std::vector<Nat>>(std::move(majorant));
    Fast fast = [shared](std::uint64_t n) -> std::optional<std::uint64_t> {
      const Nat& v = n < shared->size() ? (*shared)[n] : shared->back();
      if (v > Nat(std::numeric_limits<std::uint64_t>::max())) return std::nullopt;
      return v.convert_to<std::uint64_t>();
    };
    return Counterfunction(
        std::move(descriptor),
        [shared](const Bound& n) {
          if (auto u = n.to_u64(); u && *u < shared->size()) return Bound::promote((*shared)[*u]);
          return Bound::promote(shared->back());
        },
        {true, true, Envelope::constant(top)}, fast);
  }

  /// The subsequence map of a pack as a counterfunction.
  static Counterfunction of_map(const MonotoneMap& f) {
    return Counterfunction(
        f.describe(), [f](const Bound& n) { return f(n); }, {true, true, f.envelope()},
        [f](std::uint64_t n) -> std::optional<std::uint64_t> {
          if (f.kind() == MonotoneMap::Kind::self_power && n > 16) return std::nullopt;
          const Nat v = f(Nat(n));
          if (v > Nat(std::numeric_limits<std::uint64_t>::max())) return std::nullopt;
          return v.convert_to<std::uint64_t>();
        });
  }

  /// n -> outer(inner(n)).
  static Counterfunction compose(const Counterfunction& outer, const Counterfunction& inner) {
    Fast fast;
    if (outer.fast_ && inner.fast_) {
      fast = [o = outer.fast_, in = inner.fast_](std::uint64_t n) -> std::optional<std::uint64_t> {
        if (auto v = in(n)) return o(*v);
        return std::nullopt;
      };
    }
    return Counterfunction(
        outer.descriptor() + " o " + inner.descriptor(),
        [o = outer, in = inner](const Bound& n) { return o(in(n)); },
        {outer.monotone() && inner.monotone(), false,
         compose_env(outer.envelope(), inner.envelope())},
        fast);
  }

  /// k -> k* for a pack's subsequence map.
  static Counterfunction star_of(const MonotoneMap& f) {
    return Counterfunction("star(" + f.describe() + ")", [f](const Bound& k) { return f.star(k); },
                           {true, true, f.star_envelope()});
  }

 private:
  std::string descriptor_;
  Eval eval_;
  Traits traits_;
  Fast fast_;
};

/// Evaluates a registered monotone map at a Bound; rejects non-monotone maps.
inline Bound apply_monotone(const Counterfunction& fn, const Bound& b) {
  if (!fn.monotone()) {
    throw Error("apply_monotone: '" + fn.descriptor() + "' is not registered as monotone");
  }
  return fn(b);
}

// ---------------------------------------------------------------------------
// Iteration

struct IterateOptions {
  /// Magnitude-mode steps taken one by one before extrapolating.
  std::uint64_t magnitude_steps = 256;
  /// Upper limit on steps evaluated one by one.
  std::uint64_t step_limit = 100000000;
};

namespace detail {

/// ln ln of the K-fold iterate of a map with envelope (D > 1, c), from x0.
inline Bound envelope_jump(const Envelope& env, const Bound& x0, const Bound& count) {
  const double deg = std::max(env.degree, 1.0);
  const double c = std::max(env.ln_coef, 0.0);
  const auto k_exact = count.exact();
  if (deg > 1.0) {
    // ln N_{k+1} <= c + D ln N_k, so ln ln N_K <= K ln D + ln(ln x0 + c/(D-1))
    const double shift = up(c / down(deg - 1.0));
    const Interval ln_deg = log(Interval::of(Real(deg), Real(deg)));
    const bool small_start = x0.is_exact() && bit_length(*x0.exact()) < 2000;
    if (k_exact && small_start) {
      const Interval ln_x0 = log(Interval::of_nat(std::max(*x0.exact(), Nat(1))));
      const Interval head = Interval::of_nat(*k_exact) * ln_deg;
      const Interval tail = log(ln_x0 + Interval::of(Real(shift), Real(shift)));
      return Bound::exp_tower(2, head + tail);
    }
    // ln(L0 + s) <= ln L0 + s/L0 <= ln L0 + s for L0 >= 1
    const Bound head = k_exact ? Bound::promote((Interval::of_nat(*k_exact) * ln_deg).ceil_upper())
                               : mul(count, Bound::promote(ln_deg.ceil_upper()));
    const Bound tail = add(log_bound(x0, 2), Bound::promote(ceil_nat(Real(shift)) + 1));
    return Bound::exp_tower(2, add(head, tail));
  }
  // F(n) <= C n, so N_K <= C^K x0
  const Bound head = k_exact ? Bound::promote((Interval::of_nat(*k_exact) *
                                               Interval::of(Real(c), Real(c)))
                                                  .ceil_upper())
                             : mul(count, Bound::promote(ceil_nat(Real(c))));
  return Bound::exp_tower(1, add(head, log_bound(x0, 1)));
}

struct LevelShift {
  std::uint64_t levels;
  double increment;
};

inline std::optional<LevelShift> level_shift(const Bound& before, const Bound& after) {
  const Magnitude* a = before.magnitude();
  const Magnitude* b = after.magnitude();
  if (!a || !b || b->level <= a->level) return std::nullopt;
  const double inc = b->value - a->value;
  if (inc < 0 || inc > 1e-9 * std::max(1.0, a->value)) return std::nullopt;
  return LevelShift{b->level - a->level, inc};
}

}  // namespace detail

/// count-fold iterate of fn starting at start.
///
/// Steps are evaluated one at a time while they stay exact. Once values
/// become magnitudes, a bounded number of steps is taken and the remainder
/// is extrapolated, either by the map's growth envelope or, when each step
/// is observed to add a fixed number of exponential levels, by repeating
/// that level shift (with the largest observed value increment per step).
inline Bound iterate_fn(const Counterfunction& fn, const Bound& start, const Bound& count,
                        const IterateOptions& opt = {}) {
  if (!fn.monotone()) {
    throw Error("iterate_fn: '" + fn.descriptor() + "' is not registered as monotone");
  }
  const std::string note = "iterate(" + fn.descriptor() + ", " + start.summary() + ", " +
                           count.summary() + ")";
  const std::optional<std::uint64_t> total = count.to_u64();
  if (!total) {
    if (!fn.envelope()) {
      throw Error("iterate_fn: count " + count.summary() + " needs a growth envelope for '" +
                  fn.descriptor() + "'");
    }
    return detail::envelope_jump(*fn.envelope(), start, count)
        .as_upper_only()
        .with_note(note + " via envelope");
  }

  Bound x = start;
  std::uint64_t i = 0;
  // 64-bit fast path
  if (fn.has_fast_path()) {
    if (auto u = x.to_u64()) {
      std::uint64_t v = *u;
      while (i < *total && i < opt.step_limit) {
        const auto next = fn.try_at(v);
        if (!next) break;
        if (*next <= v) {
          throw Error("iterate_fn: '" + fn.descriptor() + "' falls below successor at " +
                      std::to_string(v));
        }
        v = *next;
        ++i;
      }
      x = Bound(v).as_upper_only(start.upper_only());
    }
  }

  std::uint64_t magnitude_steps = 0;
  std::optional<detail::LevelShift> last_shift;
  int shift_streak = 0;
  double max_increment = 0.0;
  while (i < *total) {
    if (i >= opt.step_limit) {
      throw Error("iterate_fn: " + std::to_string(*total) + " steps of '" + fn.descriptor() +
                  "' exceed the step limit and no extrapolation applies");
    }
    Bound y = fn(x);
    if (x.is_exact() && y.is_exact() && *y.exact() <= *x.exact()) {
      throw Error("iterate_fn: '" + fn.descriptor() + "' falls below successor at " +
                  x.summary());
    }
    ++i;
    if (!y.is_exact()) {
      ++magnitude_steps;
      if (auto s = detail::level_shift(x, y)) {
        if (last_shift && last_shift->levels == s->levels && s->increment <= max_increment * 4 + 1e-300) {
          ++shift_streak;
        } else {
          shift_streak = 0;
        }
        max_increment = std::max(max_increment, s->increment);
        last_shift = s;
      } else {
        shift_streak = 0;
        last_shift.reset();
      }
    }
    x = std::move(y);
    if (i == *total) break;
    const std::uint64_t remaining = *total - i;
    if (shift_streak >= 3) {
      const Magnitude m = *x.magnitude();
      const std::uint64_t levels = last_shift->levels;
      if (remaining > (std::numeric_limits<std::uint64_t>::max() - m.level) / levels) {
        throw Error("iterate_fn: exponential tower height overflows");
      }
      const double value = up(m.value + up(static_cast<double>(remaining) * up(max_increment * 2 + 1e-15 * m.value)));
      return Bound::magnitude_of(m.level + levels * remaining, value)
          .with_note(note + " via level shift");
    }
    if (magnitude_steps >= opt.magnitude_steps && fn.envelope()) {
      return detail::envelope_jump(*fn.envelope(), x, Bound(remaining))
          .as_upper_only()
          .with_note(note + " via envelope");
    }
  }
  return x.with_note(note);
}

}  // namespace bruck
