// Parameter sequences (lambda_n), (theta_n), the subsequence map f and the
// moduli that witness acceptable pairing, plus an auditor for them.
#pragma once

#include "bruck/monotone.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bruck {

using Modulus = std::function<Bound(const Rational&)>;

/// lambda_j = j^(-exponent) for j >= from, and 0 below.
struct PowerLaw {
  Rational exponent;
  std::uint64_t from = 1;
};

struct ModuliPack {
  std::string family;
  MonotoneMap f = MonotoneMap::affine(1, 0);
  Modulus phi1_fn, phi2_fn, phi3_fn;
  Nat n0 = 1;
  Rational delta = 1;
  std::function<double(std::uint64_t)> lambda;
  std::function<double(std::uint64_t)> theta;
  /// Enclosure of theta at an arbitrary (possibly huge) index.
  std::function<Interval(const Bound&)> theta_at;
  /// Enclosure of theta_j given an enclosure of ln j; valid for j >= 3.
  std::function<Interval(const Interval&)> theta_of_log;
  std::optional<PowerLaw> lambda_law;
  /// Modulus of uniform continuity of the operator, when one is attached.
  std::function<Rational(const Rational&)> omega;
  std::uint64_t first_index = 1;

  Bound phi1(const Rational& eps) const { return call(phi1_fn, eps, "phi1"); }
  Bound phi2(const Rational& eps) const { return call(phi2_fn, eps, "phi2"); }
  Bound phi3(const Rational& eps) const { return call(phi3_fn, eps, "phi3"); }

  Nat f_at(const Nat& n) const { return f(n); }
  Bound f_at(const Bound& n) const { return f(n); }

  nlohmann::json describe() const {
    return {{"family", family}, {"f", f.describe()}, {"n0", n0.str()}, {"delta", to_string(delta)}};
  }

 private:
  static Bound call(const Modulus& fn, const Rational& eps, const char* name) {
    if (eps <= 0) throw ConfigError(std::string(name) + ": epsilon must be positive");
    if (!fn) throw ConfigError(std::string(name) + " is not defined for this pack");
    return fn(eps);
  }
};

/// Largest n with f(n) <= k.
inline Nat k_star(const ModuliPack& pack, const Nat& k) { return pack.f.star(k); }

namespace detail {

inline Bound ceil_bound(const Interval& x) {
  if (x.hi() < 0) return Bound(0);
  return Bound::promote_estimate(x.ceil_upper(), !x.is_exact());
}

/// ceil(exp(t)) - 1 style values that may be astronomically large.
inline Bound ceil_exp(const Interval& t, bool minus_one) {
  if (t.upper_double() < 1e5) {
    Interval v = exp(t);
    if (minus_one) v = v - Interval(1L);
    return ceil_bound(v);
  }
  return Bound::exp_tower(1, t);
}

inline Interval power_theta(const Bound& n, const Rational& q) {
  if (const Nat* v = n.exact()) {
    if (*v == 0) throw Error("theta at index 0");
    return pow(Interval::of_nat(*v), -q);
  }
  return exp(-Interval(q) * n.log_iterated(1));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Example 1: lambda_n = n^-p, theta_n = n^-q

struct Ex1Params {
  Rational p;
  Rational q;
  Rational r;
  Rational d;
};

/// Validated parameters with the exponent d chosen from the two branches.
inline Ex1Params ex1_params(const Rational& p, const Rational& q) {
  if (!(p > 0 && p < 1)) throw ConfigError("ex1: need 0 < p < 1");
  if (!(q > 0 && q < p && q < 1 - p)) throw ConfigError("ex1: need 0 < q < min{p, 1-p}");
  Ex1Params e{p, q, (p + q) / 2, 0};
  const Rational inv = 1 / (1 - q / (1 - p));  // (1 - q/(1-p))^-1
  const Rational second = Rational(3, 2) * inv;
  const Rational denom = 1 - e.r - p;
  e.d = second;
  if (denom > 0) {
    const Rational first = (1 - p) / denom;
    if (first < second) e.d = first;
  }
  if (!(e.d > 1)) throw ConfigError("ex1: degenerate exponent d = " + to_string(e.d));
  if (!(e.d > inv && e.d < 2 * inv)) {
    throw ConfigError("ex1: exponent d = " + to_string(e.d) + " outside its admissible interval");
  }
  if (p < Rational(1, 2) && !(e.d < (1 - p) / (1 - 2 * p))) {
    throw ConfigError("ex1: exponent d = " + to_string(e.d) + " violates d < (1-p)/(1-2p)");
  }
  return e;
}

inline ModuliPack ex1_pack(const Rational& p, const Rational& q) {
  const Ex1Params e = ex1_params(p, q);
  const Rational d = e.d;
  ModuliPack pack;
  pack.family = "ex1(p=" + to_string(p) + ",q=" + to_string(q) + ")";
  pack.f = MonotoneMap::power_ceil(d / (1 - p));
  pack.n0 = 1;
  pack.delta = d * (1 - q) / (1 - p) - 1;
  const double pd = to_double(p, false);
  const double qd = to_double(q, false);
  pack.lambda = [pd](std::uint64_t n) { return n == 0 ? 0.0 : std::pow(static_cast<double>(n), -pd); };
  pack.theta = [qd](std::uint64_t n) { return n == 0 ? 0.0 : std::pow(static_cast<double>(n), -qd); };
  pack.theta_at = [q](const Bound& n) { return detail::power_theta(n, q); };
  pack.theta_of_log = [q](const Interval& ln) { return exp(-Interval(q) * ln); };
  pack.lambda_law = PowerLaw{p, 1};

  pack.phi1_fn = [q](const Rational& eps) {
    return detail::ceil_bound(pow(Interval(1 / eps), 1 / q));
  };
  pack.phi2_fn = [p, q, d](const Rational& eps) {
    const Interval base = pow(Interval(Rational(2)), d) * Interval(d * q * (d + 1 - p)) /
                          Interval(eps * (1 - p) * (1 - p));
    return add(detail::ceil_bound(base * base), Bound(1));
  };
  pack.phi3_fn = [p, d](const Rational& eps) {
    const Rational half(1, 2);
    const Interval one(1L);
    if (p > half) {
      // n >= (((2p-1) eps)^(1/(1-2p)) + 1)^((1-p)/d)
      const Interval inner = pow(Interval((2 * p - 1) * eps), 1 / (1 - 2 * p)) + one;
      return add(detail::ceil_bound(pow(inner, (1 - p) / d)), Bound(1));
    }
    if (p == half) {
      const Interval num = Interval(d) * pow(Interval(Rational(2)), 2 * d / (1 - p));
      const Interval den = Interval(1 - p) * expm1(Interval(eps));
      return add(detail::ceil_bound(num / den), Bound(1));
    }
    // n^(d(1-2p)/(1-p) - 1) has a negative exponent, so the threshold
    // takes the reciprocal (1-p)/(1-p-d(1-2p)), which is positive
    const Interval a = pow(Interval(2 * d / ((1 - p) * eps)), (1 - p) / (1 - p - d * (1 - 2 * p)));
    const Interval b = pow(pow(Interval(2 / eps), 1 / (2 * p)) + one, (1 - p) / d);
    return add(detail::ceil_bound(max(a, b)), Bound(1));
  };
  return pack;
}

// ---------------------------------------------------------------------------
// Example 2: lambda_n = 1/n, theta_n = 1/log log n (n >= 3)

/// With clamp_theta, theta is replaced by min{1, theta} and set to 1 on the
/// first two indices, which keeps every modulus valid and restores the
/// standing hypotheses (theta nonincreasing in [0,1], lambda (1 + theta) <= 1)
/// that the literal sequence violates for n <= 15.
inline ModuliPack ex2_pack(bool clamp_theta = false) {
  ModuliPack pack;
  pack.family = clamp_theta ? "ex2(clamped theta)" : "ex2";
  pack.f = MonotoneMap::self_power();
  pack.n0 = 3;
  pack.delta = Rational(1, 2);
  pack.lambda = [](std::uint64_t n) { return n < 3 ? 0.0 : 1.0 / static_cast<double>(n); };
  pack.theta = [clamp_theta](std::uint64_t n) {
    if (n < 3) return clamp_theta ? 1.0 : 0.0;
    const double t = 1.0 / std::log(std::log(static_cast<double>(n)));
    return clamp_theta ? std::min(1.0, t) : t;
  };
  pack.theta_at = [clamp_theta](const Bound& n) {
    if (auto u = n.to_u64(); u && *u < 3) return Interval(clamp_theta ? 1L : 0L);
    const Interval t = Interval(1L) / n.log_iterated(2);
    return clamp_theta ? min(t, Interval(1L)) : t;
  };
  pack.theta_of_log = [clamp_theta](const Interval& ln) {
    const Interval t = Interval(1L) / log(ln);
    return clamp_theta ? min(t, Interval(1L)) : t;
  };
  pack.lambda_law = PowerLaw{Rational(1), 3};
  pack.phi1_fn = [](const Rational& eps) { return Bound::exp_tower(2, Interval(1 / eps)); };
  pack.phi2_fn = [](const Rational& eps) {
    const Bound e4 = detail::ceil_bound(exp(Interval(4L)));
    const Bound other = detail::ceil_exp(Interval(1 / (eps * eps) - 1), true);
    return max(e4, other);
  };
  pack.phi3_fn = [](const Rational& eps) {
    const Interval v = log(Interval(2 / eps + 1));
    return max(Bound(3), detail::ceil_bound(v));
  };
  return pack;
}

// ---------------------------------------------------------------------------
// Synthetic pack for exact pipeline regressions: f(n) = a n + b, constant
// moduli. Its sequences are identically zero; it is not acceptably paired
// and exists only to exercise the rate pipeline.

inline ModuliPack synthetic_pack(const Nat& f_mul = 2, const Nat& f_add = 0, const Nat& phi = 1,
                                 const Nat& n0 = 1, const Rational& delta = 2) {
  ModuliPack pack;
  pack.family = "synthetic(f=" + f_mul.str() + "n+" + f_add.str() + ",phi=" + phi.str() +
                ",n0=" + n0.str() + ",delta=" + to_string(delta) + ")";
  pack.f = MonotoneMap::affine(f_mul, f_add);
  pack.n0 = n0;
  if (delta <= 0) throw ConfigError("delta must be positive");
  pack.delta = delta;
  pack.lambda = [](std::uint64_t) { return 0.0; };
  pack.theta = [](std::uint64_t) { return 0.0; };
  pack.theta_at = [](const Bound&) { return Interval(0L); };
  pack.theta_of_log = [](const Interval&) { return Interval(0L); };
  const Modulus constant = [phi](const Rational&) { return Bound::promote(phi); };
  pack.phi1_fn = constant;
  pack.phi2_fn = constant;
  pack.phi3_fn = constant;
  return pack;
}

// ---------------------------------------------------------------------------
// Audit

struct Violation {
  std::string where;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct ConditionReport {
  ConditionReport(std::string n, std::string s) : name(std::move(n)), statement(std::move(s)) {}

  std::string name;
  std::string statement;
  /// Theorem hypotheses are reported but are not part of acceptable pairing.
  bool theorem_hypothesis = false;
  std::string status = "skipped";  // pass | fail | indeterminate | skipped
  std::optional<Violation> first_violation;
  std::optional<double> worst_margin;
  std::optional<double> worst_lhs;
  std::uint64_t checks = 0;
  std::vector<std::string> methods;
  std::vector<std::string> skipped;

  /// Records one check of lhs (an enclosure) against rhs; ge selects >=.
  void record(const Interval& lhs, const Interval& rhs, bool ge, const std::string& where,
              const std::string& method) {
    ++checks;
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
    // margin: how far the whole enclosure sits on the right side
    const Interval margin_iv = ge ? lhs - rhs : rhs - lhs;
    const double margin = margin_iv.lower_double();
    const double lhs_mid = ge ? lhs.lower_double() : lhs.upper_double();
    if (!worst_margin || margin < *worst_margin) worst_margin = margin;
    if (!worst_lhs || (ge ? lhs_mid < *worst_lhs : lhs_mid > *worst_lhs)) worst_lhs = lhs_mid;
    std::string outcome;
    if (margin_iv.lo() >= 0) {
      outcome = "pass";
    } else if (margin_iv.hi() < 0) {
      outcome = "fail";
    } else {
      outcome = "indeterminate";
    }
    if (outcome != "pass" && !first_violation) {
      first_violation = Violation{where, lhs_mid, rhs.approx()};
    }
    if (outcome == "fail") {
      status = "fail";
    } else if (outcome == "indeterminate" && status != "fail") {
      status = "indeterminate";
    } else if (status == "skipped") {
      status = "pass";
    }
  }

  void record_bool(bool ok, const std::string& where, double lhs, double rhs) {
    ++checks;
    if (!ok) {
      if (!first_violation) first_violation = Violation{where, lhs, rhs};
      status = "fail";
    } else if (status == "skipped") {
      status = "pass";
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"condition", name}, {"statement", statement}, {"status", status},
                     {"kind", theorem_hypothesis ? "theorem_hypothesis" : "pairing"},
                     {"checks", checks}, {"methods", methods}, {"skipped", skipped}};
    if (worst_margin) j["worst_margin"] = *worst_margin;
    if (worst_lhs) j["worst_lhs"] = *worst_lhs;
    if (first_violation) {
      j["first_violation"] = {{"at", first_violation->where},
                              {"lhs", first_violation->lhs},
                              {"rhs", first_violation->rhs}};
    }
    return j;
  }
};

struct AuditReport {
  std::string family;
  std::vector<ConditionReport> conditions;

  const ConditionReport& at(const std::string& name) const {
    for (const auto& c : conditions) {
      if (c.name == name) return c;
    }
    throw Error("no condition named " + name);
  }
  /// Every pairing condition passed (theorem hypotheses are not counted).
  bool passed() const {
    for (const auto& c : conditions) {
      if (!c.theorem_hypothesis && (c.status == "fail" || c.status == "indeterminate")) return false;
    }
    return true;
  }
  bool any_fail() const {
    for (const auto& c : conditions) {
      if (!c.theorem_hypothesis && c.status == "fail") return true;
    }
    return false;
  }
  bool hypotheses_hold() const {
    for (const auto& c : conditions) {
      if (c.theorem_hypothesis && c.status == "fail") return false;
    }
    return true;
  }
  nlohmann::json to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : conditions) cs.push_back(c.to_json());
    return {{"family", family},
            {"conditions", cs},
            {"passed", passed()},
            {"theorem_hypotheses_hold", hypotheses_hold()}};
  }
};

struct AuditOptions {
  std::uint64_t n_max = 50;
  std::vector<Rational> eps_grid = {Rational(1), Rational(1, 10)};
  /// Total number of terms summed one by one, shared by every sum.
  std::uint64_t term_budget = 100000000;
  /// Indices checked past a modulus value that exceeds n_max.
  std::uint64_t points_beyond = 3;
  /// Prefix length for the schedule hypotheses.
  std::uint64_t prefix = 10000;
  /// Which conditions to run (empty = all).
  std::vector<std::string> only;
};

/// Enclosures of sums of lambda_j^power over j in [f(n), f(n+1)].
class BlockSums {
 public:
  BlockSums(const ModuliPack& pack, std::uint64_t budget) : pack_(pack), budget_(budget) {}

  struct Result {
    Interval value;
    std::string method;
  };

  std::optional<Result> sum(const Nat& n, int power) {
    const Interval la = pack_.f.log_at(n);
    const Interval lb = pack_.f.log_at(Nat(n + 1));
    if (lb.upper_double() < 43.0) {  // f(n+1) < 2^62
      const std::uint64_t a = pack_.f(n).convert_to<std::uint64_t>();
      const std::uint64_t b = pack_.f(Nat(n + 1)).convert_to<std::uint64_t>();
      if (b - a + 1 <= budget_) {
        budget_ -= b - a + 1;
        return Result{direct(a, b, power), "direct"};
      }
    }
    if (!pack_.lambda_law) return std::nullopt;
    if (la.upper_double() < std::log(static_cast<double>(pack_.lambda_law->from))) {
      return std::nullopt;
    }
    return Result{bracket(la, lb, pack_.lambda_law->exponent * power), "integral"};
  }

  std::uint64_t budget_left() const { return budget_; }

  /// Neumaier sum in long double, widened by a rounding allowance.
  Interval direct(std::uint64_t a, std::uint64_t b, int power) const {
    long double sum = 0.0L;
    long double comp = 0.0L;
    long double abs_sum = 0.0L;
    const bool law = pack_.lambda_law.has_value();
    const long double s =
        law ? static_cast<long double>(to_double(pack_.lambda_law->exponent, false)) * power : 0.0L;
    const std::uint64_t from = law ? pack_.lambda_law->from : 0;
    for (std::uint64_t j = a; j <= b; ++j) {
      long double t;
      if (law) {
        t = j < from ? 0.0L : powl(static_cast<long double>(j), -s);
      } else {
        t = static_cast<long double>(pack_.lambda(j));
        if (power == 2) t *= t;
      }
      const long double next = sum + t;
      if (fabsl(sum) >= fabsl(t)) {
        comp += (sum - next) + t;
      } else {
        comp += (t - next) + sum;
      }
      sum = next;
      abs_sum += t;
    }
    const long double total = sum + comp;
    // a few ulps per term for the power, plus the summation error
    const long double eps = std::numeric_limits<long double>::epsilon();
    const long double slack = (8.0L + 4.0L * eps * static_cast<long double>(b - a + 1)) * eps *
                                  abs_sum +
                              std::numeric_limits<long double>::denorm_min();
    const double lo = static_cast<double>(total - slack);
    const double hi = static_cast<double>(total + slack);
    return Interval::of(Real(down(lo)), Real(up(hi)));
  }

  /// For decreasing h(x) = x^-s: integral from a to b <= sum <= h(a) + integral.
  /// Takes ln a and ln b.
  static Interval bracket(const Interval& la, const Interval& lb, const Rational& s) {
    Interval integral;
    if (s == 1) {
      integral = lb - la;
    } else {
      const Interval k(1 - s);
      integral = (exp(k * lb) - exp(k * la)) / k;
    }
    const Interval head = exp(-Interval(s) * la);
    return Interval::of(integral.lo(), (integral + head).hi());
  }

 private:
  const ModuliPack& pack_;
  std::uint64_t budget_;
};

/// Indices n >= start to check: start..n_max, or a few past start.
inline std::vector<Nat> audit_indices(const Bound& start, std::uint64_t n_max,
                                      std::uint64_t beyond) {
  std::vector<Nat> out;
  const Nat* s = start.exact();
  if (!s) return out;
  const Nat last = *s <= n_max ? Nat(n_max) : *s + (beyond > 0 ? beyond - 1 : 0);
  for (Nat n = *s; n <= last; ++n) out.push_back(n);
  return out;
}

inline AuditReport audit_acceptably_paired(const ModuliPack& pack, const AuditOptions& opt = {}) {
  AuditReport report;
  report.family = pack.family;
  BlockSums sums(pack, opt.term_budget);
  auto wanted = [&](const std::string& name) {
    return opt.only.empty() ||
           std::find(opt.only.begin(), opt.only.end(), name) != opt.only.end();
  };
  auto eps_str = [](const Rational& e) { return "eps=" + to_string(e); };

  if (wanted("hypotheses")) {
    ConditionReport mono("theta_nonincreasing", "theta_{n+1} <= theta_n");
    ConditionReport unit("unit_interval", "lambda_n, theta_n in [0,1]");
    ConditionReport prod("lambda_theta", "lambda_n (1 + theta_n) <= 1");
    prod.theorem_hypothesis = true;
    for (std::uint64_t n = 1; n <= opt.prefix; ++n) {
      const double l = pack.lambda(n);
      const double t = pack.theta(n);
      const double t1 = pack.theta(n + 1);
      const std::string at = "n=" + std::to_string(n);
      mono.record_bool(t1 <= t, at, t1, t);
      unit.record_bool(l >= 0 && l <= 1 && t >= 0 && t <= 1, at, std::max(l, t), 1.0);
      prod.record_bool(l * (1 + t) <= 1 + 1e-15, at, l * (1 + t), 1.0);
    }
    report.conditions.push_back(std::move(mono));
    report.conditions.push_back(std::move(unit));
    report.conditions.push_back(std::move(prod));
  }

  if (wanted("i")) {
    ConditionReport c("i", "theta_n <= eps for n >= phi1(eps)");
    for (const Rational& eps : opt.eps_grid) {
      const Bound start = pack.phi1(eps);
      const Interval rhs(eps);
      auto idx = audit_indices(start, opt.n_max, opt.points_beyond);
      if (idx.empty()) {
        // the modulus itself is a magnitude; theta is still computable there
        c.record(pack.theta_at(start), rhs, false, eps_str(eps) + " n=" + start.summary(),
                 "enclosure");
        continue;
      }
      for (const Nat& n : idx) {
        c.record(pack.theta_at(Bound::promote(n)), rhs, false,
                 eps_str(eps) + " n=" + n.str(), "enclosure");
      }
    }
    report.conditions.push_back(std::move(c));
  }

  if (wanted("ii")) {
    ConditionReport c("ii", "f(n+1) >= f(n) + 1");
    const std::uint64_t top = pack.f.kind() == MonotoneMap::Kind::self_power
                                  ? std::min<std::uint64_t>(opt.n_max, 2000)
                                  : opt.n_max;
    for (std::uint64_t n = 1; n <= top; ++n) {
      const Nat a = pack.f_at(Nat(n));
      const Nat b = pack.f_at(Nat(n + 1));
      c.record_bool(b >= a + 1, "n=" + std::to_string(n), 0, 0);
    }
    if (top < opt.n_max) c.skipped.push_back(std::to_string(top + 1) + ".." + std::to_string(opt.n_max));
    report.conditions.push_back(std::move(c));
  }

  const double ln3 = std::log(3.0);
  auto theta_f = [&](const Nat& n) {
    const Interval ln = pack.f.log_at(n);
    if (pack.theta_of_log && ln.lower_double() > ln3) return pack.theta_of_log(ln);
    return pack.theta_at(pack.f_at(Bound::promote(n)));
  };

  if (wanted("iii")) {
    ConditionReport c("iii", "theta_f(n) * sum_{j=f(n)}^{f(n+1)} lambda_j >= delta for n >= n0");
    const Interval rhs(pack.delta);
    for (Nat n = pack.n0; n <= opt.n_max; ++n) {
      auto s = sums.sum(n, 1);
      if (!s) {
        c.skipped.push_back("n=" + n.str());
        continue;
      }
      c.record(theta_f(n) * s->value, rhs, true, "n=" + n.str(), s->method);
    }
    report.conditions.push_back(std::move(c));
  }

  if (wanted("iv")) {
    ConditionReport c("iv",
                      "(theta_f(n) - theta_f(n+1)) * sum lambda_j <= eps for n >= phi2(eps)");
    for (const Rational& eps : opt.eps_grid) {
      const Bound start = pack.phi2(eps);
      auto idx = audit_indices(start, opt.n_max, opt.points_beyond);
      if (idx.empty()) c.skipped.push_back(eps_str(eps) + " modulus " + start.summary());
      for (const Nat& n : idx) {
        auto s = sums.sum(n, 1);
        if (!s) {
          c.skipped.push_back(eps_str(eps) + " n=" + n.str());
          continue;
        }
        const Interval diff = theta_f(n) - theta_f(n + 1);
        c.record(diff * s->value, Interval(eps), false, eps_str(eps) + " n=" + n.str(), s->method);
      }
    }
    report.conditions.push_back(std::move(c));
  }

  if (wanted("v")) {
    ConditionReport c("v", "sum lambda_j^2 <= eps for n >= phi3(eps)");
    for (const Rational& eps : opt.eps_grid) {
      const Bound start = pack.phi3(eps);
      auto idx = audit_indices(start, opt.n_max, opt.points_beyond);
      if (idx.empty()) c.skipped.push_back(eps_str(eps) + " modulus " + start.summary());
      for (const Nat& n : idx) {
        auto s = sums.sum(n, 2);
        if (!s) {
          c.skipped.push_back(eps_str(eps) + " n=" + n.str());
          continue;
        }
        c.record(s->value, Interval(eps), false, eps_str(eps) + " n=" + n.str(), s->method);
      }
    }
    report.conditions.push_back(std::move(c));
  }
  return report;
}

}  // namespace bruck
