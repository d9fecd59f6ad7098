// Brute-force checks of the subsequence and star lemmas on random instances.
// Shared by test_lemmas and the acceptance binary.
#pragma once

#include "bruck/rates.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace bruck::testing {

struct InstanceResult {
  bool ok = true;
  std::string detail;
};

inline std::uint64_t isqrt_floor(std::uint64_t k) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(k)));
  while (r * r > k) --r;
  while ((r + 1) * (r + 1) <= k) ++r;
  return r;
}

/// A random window function: a short table of values in [0, hi], then constant.
inline Counterfunction random_g(std::mt19937_64& rng, std::uint64_t hi) {
  if (rng() % 3 == 0) return Counterfunction::affine(Nat(static_cast<long>(rng() % 2)), Nat(static_cast<long>(rng() % (hi + 1))));
  std::vector<Nat> vals;
  const int len = static_cast<int>(rng() % 30 + 1);
  for (int i = 0; i < len; ++i) vals.emplace_back(static_cast<long>(rng() % (hi + 1)));
  return Counterfunction::table(vals);
}

/// Oscillation of a over [lo, hi].
template <class Seq>
double oscillation(const Seq& a, std::uint64_t lo, std::uint64_t hi) {
  double mn = a(lo);
  double mx = mn;
  for (std::uint64_t i = lo + 1; i <= hi; ++i) {
    const double v = a(i);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return mx - mn;
}

/// Smallest n with osc(a, [n, n + g(n)]) <= eps: the optimal rate of a itself.
template <class Seq>
std::uint64_t brute_rate(const Seq& a, double eps, const Counterfunction& g, std::uint64_t limit) {
  for (std::uint64_t n = 1; n <= limit; ++n) {
    if (oscillation(a, n, n + g.at(n)) <= eps) return n;
  }
  return limit + 1;
}

/// Subsequence lemma with f(n) = n^2. Given a rate Psi for a, some n <= Psi(eps, g_f)
/// has |a_{f(i)} - a_{f(j)}| <= eps for all i, j in [n, n + g(n)].
inline InstanceResult subsequence_instance(std::mt19937_64& rng, int which) {
  const MonotoneMap f = MonotoneMap::power(2);
  const double eps = 0.01 + 0.49 * std::uniform_real_distribution<double>(0, 1)(rng);
  const Counterfunction g = random_g(rng, 12);
  const Counterfunction gf = transform_gf(f, g);
  auto sq = [](std::uint64_t i) { return i * i; };
  std::uint64_t psi = 0;
  std::function<double(std::uint64_t)> a;
  if (which % 2 == 0) {
    // a_n = 1/n is Cauchy with rate ceil(1/eps), whatever the window
    a = [](std::uint64_t n) { return 1.0 / static_cast<double>(n); };
    psi = static_cast<std::uint64_t>(std::ceil(1.0 / eps));
  } else {
    a = [](std::uint64_t n) { return std::cos(static_cast<double>(n)) / static_cast<double>(n); };
    psi = brute_rate(a, eps, gf, 1000);
  }
  const std::uint64_t limit = std::min<std::uint64_t>(psi, 1000);
  for (std::uint64_t n = 1; n <= limit; ++n) {
    double mn = a(sq(n));
    double mx = mn;
    for (std::uint64_t i = n; i <= n + g.at(n); ++i) {
      mn = std::min(mn, a(sq(i)));
      mx = std::max(mx, a(sq(i)));
    }
    if (mx - mn <= eps) return {};
  }
  return {false, "no n <= " + std::to_string(limit) + " for eps=" + std::to_string(eps) + " g=" +
                     g.descriptor()};
}

/// Star lemma with f(n) = n^2: if A holds on [n, n + g~(n)] then A(k*) holds for
/// every k in [f(n), f(n) + g(f(n))]. A is either a threshold k >= K0 or a random set.
inline InstanceResult star_instance(std::mt19937_64& rng, int which, std::uint64_t n_max = 1000) {
  ModuliPack pack = synthetic_pack();
  pack.f = MonotoneMap::power(2);
  const Counterfunction g = random_g(rng, 200);
  const Counterfunction gt = transform_gtilde(pack, g);
  std::vector<char> A(3 * n_max + 10);
  const std::uint64_t k0 = rng() % 200;
  for (std::uint64_t k = 0; k < A.size(); ++k) {
    A[k] = which % 2 == 0 ? k >= k0 : (rng() % 10 != 0);
  }
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    const std::uint64_t w = gt.at(n);
    bool holds = true;
    for (std::uint64_t k = n; k <= n + w && holds; ++k) holds = k < A.size() && A[k];
    if (!holds) continue;
    const std::uint64_t fn = n * n;
    for (std::uint64_t k = fn; k <= fn + g.at(fn); ++k) {
      const std::uint64_t ks = isqrt_floor(k);
      if (ks >= A.size() || !A[ks]) {
        return {false, "n=" + std::to_string(n) + " k=" + std::to_string(k) + " g=" + g.descriptor()};
      }
    }
  }
  return {};
}

/// (x+1)^r - x^r lies between r x^(r-1) and r (x+1)^(r-1).
inline double taylor_gap(double x, double r) {
  const double diff = std::pow(x + 1, r) - std::pow(x, r);
  const double a = r * std::pow(x, r - 1);
  const double b = r * std::pow(x + 1, r - 1);
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double tol = 1e-12 * std::max({1.0, std::abs(diff), std::abs(hi)});
  return std::min(diff - lo, hi - diff) + tol;
}

/// x / sqrt(1 + x) - log(1 + x).
inline double log_bound_slack(double x) { return x / std::sqrt(1 + x) - std::log1p(x); }

}  // namespace bruck::testing
