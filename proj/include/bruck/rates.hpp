// Counterfunction transforms and the rate functionals Phi, Phi', Phi'',
// Delta and the default Psi.
#pragma once

#include "bruck/schedules.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bruck {

namespace detail {

inline std::optional<std::uint64_t> add_u64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) return std::nullopt;
  return r;
}

inline std::optional<std::uint64_t> sub_u64(std::uint64_t a, std::uint64_t b) {
  return a >= b ? a - b : 0;
}

/// ln(s + 1) rounded up, for a shift s of any size.
inline double ln_shift(const Bound& s) {
  if (const Nat* n = s.exact()) return log(Interval::of_nat(*n + 1)).upper_double();
  return up(ln_double_upper(s) + 1e-12);
}

}  // namespace detail

/// g_f(n) = f(n + g(n)) - n. Needs f(n) >= n, checked on a prefix.
inline Counterfunction transform_gf(const MonotoneMap& f, const Counterfunction& g,
                                    std::uint64_t audit_prefix = 1000) {
  for (std::uint64_t n = 0; n <= audit_prefix; ++n) {
    if (f.kind() == MonotoneMap::Kind::self_power && n > 200) break;
    if (f(Nat(n)) < n) throw Error("transform_gf: f(" + std::to_string(n) + ") < " + std::to_string(n));
  }
  const Counterfunction fc = Counterfunction::of_map(f);
  Counterfunction::Fast fast = [fc, g](std::uint64_t n) -> std::optional<std::uint64_t> {
    auto gn = g.try_at(n);
    if (!gn) return std::nullopt;
    auto arg = detail::add_u64(n, *gn);
    if (!arg) return std::nullopt;
    auto v = fc.try_at(*arg);
    if (!v) return std::nullopt;
    return *v - n;
  };
  return Counterfunction(
      "gf[" + f.describe() + "](" + g.descriptor() + ")",
      [f, g](const Bound& n) { return sub_saturating(f(add(n, g(n))), n); },
      {false, g.window_monotone(),
       compose_env(f.envelope(), sum_env(Envelope{1.0, 0.0}, g.envelope()))},
      fast);
}

/// g~(n) = (f(n) + g(f(n)))* - n.
inline Counterfunction transform_gtilde(const ModuliPack& pack, const Counterfunction& g) {
  const MonotoneMap f = pack.f;
  auto eval = [f, g](const Bound& n) {
    const Bound fn = f(n);
    return sub_saturating(f.star(add(fn, g(fn))), n);
  };
  Counterfunction::Fast fast = [f, g](std::uint64_t n) -> std::optional<std::uint64_t> {
    if (f.kind() == MonotoneMap::Kind::self_power && n > 16) return std::nullopt;
    const Nat fn = f(Nat(n));
    if (fn > Nat(std::numeric_limits<std::uint64_t>::max())) return std::nullopt;
    auto gfn = g.try_at(fn.convert_to<std::uint64_t>());
    if (!gfn) return std::nullopt;
    const Nat s = f.star(fn + *gfn);
    return (s - n).convert_to<std::uint64_t>();
  };
  const auto f_env = f.envelope();
  return Counterfunction(
      "gtilde(" + g.descriptor() + ")", eval,
      {false, g.window_monotone(),
       compose_env(f.star_envelope(), sum_env(f_env, compose_env(g.envelope(), f_env)))},
      fast);
}

/// Adds a constant to a counterfunction.
inline Counterfunction plus_constant(const Counterfunction& g, const Bound& k, std::string descriptor) {
  Counterfunction::Fast fast;
  if (auto ku = k.to_u64()) {
    fast = [g, kk = *ku](std::uint64_t n) -> std::optional<std::uint64_t> {
      auto v = g.try_at(n);
      if (!v) return std::nullopt;
      return detail::add_u64(*v, kk);
    };
  }
  std::optional<Envelope> env;
  if (g.envelope()) env = *g.envelope() + Envelope{0.0, detail::ln_shift(k)};
  return Counterfunction(std::move(descriptor), [g, k](const Bound& n) { return add(g(n), k); },
                         {g.monotone(), g.window_monotone(), env}, fast);
}

/// g^(n) = g~(n) + 1.
inline Counterfunction transform_ghat(const ModuliPack& pack, const Counterfunction& g) {
  return plus_constant(transform_gtilde(pack, g), Bound(1), "ghat(" + g.descriptor() + ")");
}

/// n -> s + h(n + s); window-monotone whenever h is.
inline Counterfunction shifted(const Counterfunction& h, const Bound& s, std::string descriptor) {
  Counterfunction::Fast fast;
  if (auto su = s.to_u64()) {
    fast = [h, ss = *su](std::uint64_t n) -> std::optional<std::uint64_t> {
      auto arg = detail::add_u64(n, ss);
      if (!arg) return std::nullopt;
      auto v = h.try_at(*arg);
      if (!v) return std::nullopt;
      return detail::add_u64(*v, ss);
    };
  }
  std::optional<Envelope> env;
  if (h.envelope()) {
    // n + s <= (s + 1) n for n >= 1
    const Envelope sh{1.0, detail::ln_shift(s)};
    env = Envelope{0.0, detail::ln_shift(s)} + Envelope::compose(*h.envelope(), sh);
  }
  return Counterfunction(std::move(descriptor),
                         [h, s](const Bound& n) { return add(s, h(add(n, s))); },
                         {h.monotone(), h.window_monotone(), env}, fast);
}

/// g_d(n) = d + n1 + 1 + g~(n + n1 + d + 1), with shift = n1 + d + 1.
inline Counterfunction transform_gd(const Counterfunction& gtilde, const Bound& shift) {
  return shifted(gtilde, shift, "gd[" + shift.summary() + "](" + gtilde.descriptor() + ")");
}

/// g_b(n) = b + g(n + b).
inline Counterfunction transform_gb(const Counterfunction& g, const Bound& b) {
  return shifted(g, b, "gb[" + b.summary() + "](" + g.descriptor() + ")");
}

/// The map iterated by the default Psi: n -> n + 1 + h(n + 1).
inline Counterfunction psi_step(const Counterfunction& h) {
  if (!h.window_monotone()) {
    throw Error("psi: '" + h.descriptor() + "' is not registered as window-monotone");
  }
  Counterfunction::Fast fast = [h](std::uint64_t n) -> std::optional<std::uint64_t> {
    auto v = h.try_at(n + 1);
    if (!v || n == std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
    return detail::add_u64(n + 1, *v);
  };
  std::optional<Envelope> env;
  if (h.envelope()) {
    const Envelope one = Envelope::shift(1);
    env = one + Envelope::compose(*h.envelope(), one);
  }
  return Counterfunction(
      "psistep(" + h.descriptor() + ")",
      [h](const Bound& n) {
        const Bound n1 = add(n, Bound(1));
        return add(n1, h(n1));
      },
      {true, true, env}, fast);
}

// ---------------------------------------------------------------------------
// Rate functionals

/// A rate of metastability Psi(eps, g) for the resolvent path.
using RateFunctional = std::function<Bound(const Interval& eps, const Counterfunction& g)>;

/// Psi(eps, g) = h~^(ceil(16 D^2 / eps^2))(1) with h~(n) = n + 1 + g(n + 1).
inline Bound psi_default(const Interval& eps, const Counterfunction& g, const Rational& d_const,
                         const IterateOptions& opt = {}) {
  if (!(eps.lo() > 0)) throw ConfigError("psi: epsilon must be positive");
  if (d_const <= 0) throw ConfigError("psi: D must be positive");
  const Interval ratio = Interval(16 * d_const * d_const) / (eps * eps);
  const Nat hi = ratio.ceil_upper();
  const bool exact_count = ratio.is_exact() || ceil_nat(ratio.lo()) == hi;
  const Bound count = Bound::promote_estimate(hi, !exact_count);
  Bound r = iterate_fn(psi_step(g), Bound(1), count, opt);
  if (!exact_count) r = r.as_upper_only();
  return r;
}

inline Bound psi_default(const Rational& eps, const Counterfunction& g, const Rational& d_const,
                         const IterateOptions& opt = {}) {
  return psi_default(Interval(eps), g, d_const, opt);
}

struct RateOptions {
  /// D in the default Psi; defaults to M.
  std::optional<Rational> d_const;
  /// Use max{M, d_rate} for D instead.
  bool d_const_from_drate = false;
  IterateOptions iterate;
  /// Replaces the default Psi when set.
  RateFunctional psi;
};

struct DerivedConstants {
  Rational eps;
  Rational M;
  Interval c;
  Interval eps_tilde;
  /// Lower rational endpoint of eps_tilde; moduli are antitone so this is safe.
  Rational eps_tilde_lo;
  Bound k0;
  Bound d_rate;
  bool d_rate_log_branch_clamped = false;
  Bound n1;
  Bound n1_hat;
  std::optional<Bound> b;
  std::vector<std::string> notes;

  nlohmann::json to_json() const {
    nlohmann::json j{{"eps", to_string(eps)},
                     {"M", to_string(M)},
                     {"c", {c.lower_double(), c.upper_double()}},
                     {"eps_tilde", {eps_tilde.lower_double(), eps_tilde.upper_double()}},
                     {"k0", bruck::to_json(k0)},
                     {"d_rate", bruck::to_json(d_rate)},
                     {"d_rate_log_branch_clamped", d_rate_log_branch_clamped},
                     {"n1", bruck::to_json(n1)},
                     {"n1_hat", bruck::to_json(n1_hat)},
                     {"notes", notes}};
    if (b) j["b"] = bruck::to_json(*b);
    return j;
  }
};

namespace detail {

inline Bound max_noted(const Bound& a, const Bound& b, std::vector<std::string>& notes,
                       const std::string& label) {
  if (compare(a, b) == Ordering::indeterminate) {
    notes.push_back(label + ": comparison indeterminate, used the sum as an upper bound");
  }
  return max(a, b);
}

inline void check_rate_inputs(const Rational& eps, const Rational& M) {
  if (eps <= 0) throw ConfigError("epsilon must be positive");
  if (M < 1) throw ConfigError("M must be >= 1");
}

}  // namespace detail

inline DerivedConstants derived_constants(const Rational& eps, const Rational& M,
                                          const ModuliPack& pack) {
  detail::check_rate_inputs(eps, M);
  DerivedConstants k;
  k.eps = eps;
  k.M = M;
  k.c = exp(-Interval(pack.delta / 2));
  k.eps_tilde = (Interval(1L) - k.c) * Interval(eps / 16);
  k.eps_tilde_lo = k.eps_tilde.lower_rational();
  const Rational et = k.eps_tilde_lo;
  const Rational M2 = M * M;
  auto& notes = k.notes;

  k.k0 = detail::max_noted(pack.phi2(eps * eps / (6 * M2)), pack.phi3(eps * eps / (12 * M2)), notes, "k0");

  // ceil(log_c(eps/8M)) = ceil(-2 ln(eps/8M) / delta)
  const Rational ratio = eps / (8 * M);
  Bound log_branch(0);
  if (ratio >= 1) {
    k.d_rate_log_branch_clamped = true;
    notes.push_back("d: eps/8M >= 1, log_c branch clamped to 0");
  } else {
    const Interval v = Interval(-2L) * log(Interval(ratio)) / Interval(pack.delta);
    log_branch = detail::ceil_bound(v);
  }
  k.d_rate = detail::max_noted(pack.f_at(k.k0), log_branch, notes, "d");

  Bound n1 = Bound::promote(pack.n0);
  n1 = detail::max_noted(n1, pack.phi1(pack.delta / 2), notes, "n1");
  n1 = detail::max_noted(n1, pack.phi2(et * et / (4 * M2)), notes, "n1");
  n1 = detail::max_noted(n1, pack.phi3(et * et / (8 * M2)), notes, "n1");
  // variants stated elsewhere for the same constant; the max covers all
  n1 = detail::max_noted(n1, pack.phi2(et / (4 * M2)), notes, "n1");
  n1 = detail::max_noted(n1, pack.phi3(et * et / (2 * M2)), notes, "n1");
  k.n1 = n1;
  k.n1_hat = detail::max_noted(n1, pack.phi1(eps / M), notes, "n1_hat");
  return k;
}

/// b = f(phi1(eps/3M)* + 1).
inline Bound b_constant(const Rational& eps, const Rational& M, const ModuliPack& pack) {
  detail::check_rate_inputs(eps, M);
  const Bound p = pack.phi1(eps / (3 * M));
  return pack.f_at(add(pack.f.star(p), Bound(1)));
}

struct RateResult {
  Bound value;
  DerivedConstants constants;
  Bound psi;
  std::string functional;

  nlohmann::json to_json() const {
    return {{"functional", functional},
            {"bound", bruck::to_json(value)},
            {"psi", bruck::to_json(psi)},
            {"constants", constants.to_json()}};
  }
};

namespace detail {

inline Rational resolve_d_const(const RateOptions& opt, const Rational& M, const Bound& d_rate,
                                std::vector<std::string>& notes) {
  Rational D = opt.d_const ? *opt.d_const : M;
  if (opt.d_const_from_drate) {
    const Nat* d = d_rate.exact();
    if (!d) throw ConfigError("D = max{M, d_rate} needs an exact d_rate");
    if (Rational(*d) > D) D = Rational(*d);
  }
  notes.push_back("Psi uses D = " + to_string(D) +
                  (opt.d_const_from_drate ? " (max{M, d_rate})" : opt.d_const ? " (configured)" : " (M)"));
  return D;
}

/// f(Psi(eps~, (g_d)_f) + n + d + 1) with g_d built from `inner` and shift n + d + 1.
inline RateResult phi_pipeline(const Rational& eps, const Counterfunction& inner,
                               const ModuliPack& pack, const Rational& M, const RateOptions& opt,
                               bool hat, const std::string& name) {
  RateResult r;
  r.functional = name;
  r.constants = derived_constants(eps, M, pack);
  DerivedConstants& k = r.constants;
  const Bound n = hat ? k.n1_hat : k.n1;
  const Bound shift = add(add(n, k.d_rate), Bound(1));
  const Counterfunction gd = transform_gd(inner, shift);
  const Counterfunction gdf = transform_gf(pack.f, gd);
  if (opt.psi) {
    r.psi = opt.psi(k.eps_tilde, gdf);
    k.notes.push_back("Psi: supplied functional");
  } else {
    const Rational D = resolve_d_const(opt, M, k.d_rate, k.notes);
    r.psi = psi_default(k.eps_tilde, gdf, D, opt.iterate);
  }
  const Bound total = add(r.psi, shift);
  r.value = pack.f_at(total)
                .with_provenance(r.psi.provenance())
                .with_note(name + "(eps=" + to_string(eps) + ", M=" + to_string(M) + ", " +
                           pack.family + "): f(Psi + " + (hat ? "n1_hat" : "n1") + " + d + 1), n=" +
                           n.summary() + ", d=" + k.d_rate.summary());
  return r;
}

}  // namespace detail

inline RateResult phi_full(const Rational& eps, const Counterfunction& g, const ModuliPack& pack,
                           const Rational& M, const RateOptions& opt = {}) {
  return detail::phi_pipeline(eps, transform_gtilde(pack, g), pack, M, opt, false, "Phi");
}

inline Bound phi(const Rational& eps, const Counterfunction& g, const ModuliPack& pack,
                 const Rational& M, const RateOptions& opt = {}) {
  return phi_full(eps, g, pack, M, opt).value;
}

inline RateResult phi_prime_full(const Rational& eps, const Counterfunction& g,
                                 const ModuliPack& pack, const Rational& M,
                                 const RateOptions& opt = {}) {
  RateResult r = phi_full(eps / 3, g, pack, M, opt);
  r.functional = "Phi'";
  r.value = r.value.with_note("Phi'(eps) = Phi(eps/3)");
  return r;
}

inline Bound phi_prime(const Rational& eps, const Counterfunction& g, const ModuliPack& pack,
                       const Rational& M, const RateOptions& opt = {}) {
  return phi_prime_full(eps, g, pack, M, opt).value;
}

/// The hatted pipeline at eps/3: g^ in place of g~ and n1_hat in place of n1.
inline RateResult phi_double_prime_full(const Rational& eps, const Counterfunction& g,
                                        const ModuliPack& pack, const Rational& M,
                                        const RateOptions& opt = {}) {
  detail::check_rate_inputs(eps, M);
  return detail::phi_pipeline(eps / 3, transform_ghat(pack, g), pack, M, opt, true, "Phi''");
}

inline Bound phi_double_prime(const Rational& eps, const Counterfunction& g,
                              const ModuliPack& pack, const Rational& M,
                              const RateOptions& opt = {}) {
  return phi_double_prime_full(eps, g, pack, M, opt).value;
}

/// The argument min{eps/3, omega(eps/3M)} used by Delta.
inline Rational delta_eps(const Rational& eps, const Rational& M,
                          const std::function<Rational(const Rational&)>& omega) {
  if (!omega) throw ConfigError("Delta needs a modulus of uniform continuity omega");
  const Rational w = omega(eps / (3 * M));
  if (w <= 0) throw ConfigError("omega must be positive");
  const Rational third = eps / 3;
  return w < third ? w : third;
}

/// Delta(g, eps) = Phi(g_b, min{eps/3, omega(eps/3M)}) + b.
inline RateResult delta_bound_full(const Rational& eps, const Counterfunction& g,
                                   const ModuliPack& pack, const Rational& M,
                                   const std::function<Rational(const Rational&)>& omega,
                                   const RateOptions& opt = {}) {
  detail::check_rate_inputs(eps, M);
  const Rational e = delta_eps(eps, M, omega);
  const Bound b = b_constant(eps, M, pack);
  RateResult r = phi_full(e, transform_gb(g, b), pack, M, opt);
  r.functional = "Delta";
  r.constants.b = b;
  r.value = add(r.value, b).with_provenance(r.value.provenance()).with_note(
      "Delta: Phi(g_b, " + to_string(e) + ") + b, b=" + b.summary());
  return r;
}

inline Bound delta_bound(const Rational& eps, const Counterfunction& g, const ModuliPack& pack,
                         const Rational& M, const std::function<Rational(const Rational&)>& omega,
                         const RateOptions& opt = {}) {
  return delta_bound_full(eps, g, pack, M, omega, opt).value;
}

/// omega(eps) = eps / L for an L-Lipschitz operator.
inline std::function<Rational(const Rational&)> lipschitz_omega(const Rational& L) {
  if (L <= 0) throw ConfigError("Lipschitz constant must be positive");
  return [L](const Rational& e) { return e / L; };
}

}  // namespace bruck
