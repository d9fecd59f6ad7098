#include <catch2/catch_amalgamated.hpp>

#include "bruck/rates.hpp"

#include <random>

using namespace bruck;

namespace {

using BigFloat = boost::multiprecision::mpfr_float_100;

// The synthetic regression by hand: x_{k+1} = 2 x_k + 10 from x_0 = 1, so
// x_k + 10 = 11 * 2^k. The count is ceil(16 / eps~^2) with eps~ = (1 - 1/e) / 2.
Nat synthetic_phi_oracle() {
  const BigFloat et = (1 - boost::multiprecision::exp(BigFloat(-1))) / 2;
  const BigFloat ratio = 16 / (et * et);
  const long count = static_cast<long>(boost::multiprecision::ceil(ratio).convert_to<double>());
  Nat x = 1;
  for (long k = 0; k < count; ++k) x = 2 * x + 10;
  return 2 * (x + 4);
}

ModuliPack square_pack() {
  ModuliPack p = synthetic_pack();
  p.f = MonotoneMap::power(2);
  return p;
}

}  // namespace

TEST_CASE("g_f examples") {
  const auto sq = transform_gf(MonotoneMap::power(2), Counterfunction::constant(2));
  CHECK(sq(Bound(3)) == Bound(22));
  const auto e2 = transform_gf(MonotoneMap::self_power(), Counterfunction::constant(0));
  CHECK(e2(Bound(3)) == Bound(24));
  const auto idf = transform_gf(MonotoneMap::affine(1, 0), Counterfunction::power(2));
  for (std::uint64_t n = 0; n < 50; ++n) CHECK(idf.at(n) == n * n);
  CHECK_THROWS_AS(transform_gf(MonotoneMap::affine(0, 3), Counterfunction::constant(0)), Error);
}

TEST_CASE("g~ and g^ examples") {
  const auto pack = square_pack();
  const auto gt = transform_gtilde(pack, Counterfunction::identity());
  CHECK(gt.at(2) == 0);
  CHECK(gt.at(3) == 1);
  const auto gh = transform_ghat(pack, Counterfunction::identity());
  CHECK(gh.at(3) == 2);
  const auto gh0 = transform_ghat(pack, Counterfunction::constant(0));
  for (std::uint64_t n = 0; n < 100; ++n) CHECK(gh0.at(n) == 1);
  const auto ex2 = ex2_pack(true);
  CHECK(transform_ghat(ex2, Counterfunction::constant(0)).at(3) == 1);
  for (const auto& p : {pack, ex1_pack(Rational(1, 2), Rational(1, 4)), synthetic_pack()}) {
    const auto z = transform_gtilde(p, Counterfunction::constant(0));
    for (std::uint64_t n = 0; n < 40; ++n) CHECK(z.at(n) == 0);
  }
}

TEST_CASE("transform laws against direct recomputation") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Nat a(static_cast<long>(rng() % 4 + 1));
    const Nat b(static_cast<long>(rng() % 20));
    const auto g = Counterfunction::affine(a, b);
    const unsigned k = static_cast<unsigned>(rng() % 2 + 2);
    ModuliPack pack = synthetic_pack();
    pack.f = MonotoneMap::power(k);
    const auto gf = transform_gf(pack.f, g);
    const auto gt = transform_gtilde(pack, g);
    for (std::uint64_t n = 0; n <= 1000; ++n) {
      const Nat gn = a * n + b;
      CHECK(*gf(Bound(n)).exact() == pack.f(Nat(n + gn)) - n);
      if (n <= 200) {
        const Nat fn = pack.f(Nat(n));
        const Nat target = fn + a * fn + b;
        Nat s = 0;  // max{m : m^k <= target}
        while (pack.f(Nat(s + 1)) <= target) ++s;
        CHECK(*gt(Bound(n)).exact() == s - n);
      }
    }
  }
}

TEST_CASE("psi_default examples") {
  CHECK(psi_default(Rational(4), Counterfunction::constant(0), Rational(1)).summary() == "2");
  CHECK(psi_default(Rational(1), Counterfunction::constant(0), Rational(1)).summary() == "17");
  CHECK(psi_default(Rational(4), Counterfunction::identity(), Rational(1)).summary() == "4");
  CHECK_THROWS_AS(psi_default(Rational(0), Counterfunction::identity(), Rational(1)), ConfigError);
  const Counterfunction jumpy("jumpy", [](const Bound& n) { return n.is_exact() && *n.exact() % 2 ? Bound(0) : Bound(5); },
                              {false, false, std::nullopt});
  CHECK_THROWS_AS(psi_default(Rational(1), jumpy, Rational(1)), Error);
}

TEST_CASE("derived constants: synthetic pack") {
  const auto k = derived_constants(Rational(8), Rational(1), synthetic_pack());
  CHECK(k.c.lower_double() == Catch::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(k.eps_tilde.approx() == Catch::Approx((1 - std::exp(-1.0)) / 2).epsilon(1e-15));
  CHECK(k.k0 == Bound(1));
  CHECK(k.d_rate == Bound(2));
  CHECK(k.d_rate_log_branch_clamped);
  CHECK(k.n1 == Bound(1));
  CHECK(k.n1_hat == Bound(1));
  CHECK_THROWS_AS(derived_constants(Rational(0), Rational(1), synthetic_pack()), ConfigError);
  CHECK_THROWS_AS(derived_constants(Rational(1), Rational(1, 2), synthetic_pack()), ConfigError);
}

TEST_CASE("derived constants: large delta limit") {
  const auto k = derived_constants(Rational(1), Rational(1), synthetic_pack(2, 0, 1, 1, Rational(200)));
  CHECK(k.c.upper_double() < 1e-40);
  CHECK(k.eps_tilde.approx() == Catch::Approx(1.0 / 16).epsilon(1e-15));
}

TEST_CASE("derived constants: ex2 at eps = 1") {
  const auto pack = ex2_pack(true);
  const auto k = derived_constants(Rational(1), Rational(1), pack);
  CHECK(k.c.approx() == Catch::Approx(std::exp(-0.25)).epsilon(1e-14));
  // (1 - e^{-1/4}) / 16 = 0.0138249...
  CHECK(k.eps_tilde.approx() == Catch::Approx((1 - std::exp(-0.25)) / 16).epsilon(1e-14));
  CHECK(k.eps_tilde.approx() == Catch::Approx(0.013822).margin(5e-6));
  // k0 = phi2(1/6) = ceil(e^35 - 1)
  const BigFloat e35 = boost::multiprecision::exp(BigFloat(35)) - 1;
  std::string digits = BigFloat(boost::multiprecision::ceil(e35)).str(0, std::ios_base::fixed);
  digits = digits.substr(0, digits.find('.'));
  CHECK(*k.k0.exact() == Nat(digits));
  // d_rate = k0^k0, about 1.6e15 * 35 digits
  REQUIRE(k.d_rate.level() >= 1);
  CHECK(k.d_rate.upper_only());
  CHECK(k.d_rate.log_iterated(1).approx() ==
        Catch::Approx(std::exp(35.0) * 35.0).epsilon(1e-9));
}

TEST_CASE("Phi synthetic regression is exact") {
  const Bound v = phi(Rational(8), Counterfunction::constant(0), synthetic_pack(), Rational(1));
  REQUIRE(v.is_exact());
  CHECK_FALSE(v.upper_only());
  CHECK(*v.exact() == synthetic_phi_oracle());
  const Nat closed = 2 * (11 * mp::pow(Nat(2), 161) - 10 + 4);
  CHECK(*v.exact() == closed);
}

TEST_CASE("Phi on ex1 is a tower magnitude") {
  const auto pack = ex1_pack(Rational(1, 2), Rational(1, 4));
  const auto r = phi_full(Rational(1, 2), Counterfunction::constant(0), pack, Rational(2));
  INFO(r.to_json().dump(2));
  CHECK(r.value.level() >= 2);
  CHECK(r.value.upper_only());
}

TEST_CASE("Phi dominates f(n1 + d + 1)") {
  for (const auto& g : {Counterfunction::constant(0), Counterfunction::identity(),
                        Counterfunction::affine(2, 3)}) {
    const auto pack = synthetic_pack(3, 1);
    const auto r = phi_full(Rational(2), g, pack, Rational(1));
    const Bound floor_v = pack.f_at(add(add(r.constants.n1, r.constants.d_rate), Bound(1)));
    CHECK(definitely_le(floor_v, r.value));
  }
}

TEST_CASE("Phi' delegates to Phi at eps/3") {
  const auto pack = synthetic_pack();
  const auto g0 = Counterfunction::constant(0);
  CHECK(same_value(phi_prime(Rational(24), g0, pack, Rational(1)), phi(Rational(8), g0, pack, Rational(1))));
  const auto gi = Counterfunction::identity();
  CHECK(same_value(phi_prime(Rational(3), gi, pack, Rational(1)), phi(Rational(1), gi, pack, Rational(1))));
  for (int k = 1; k <= 6; ++k) {
    const Rational e(k * 4);
    CHECK(definitely_le(phi(e, g0, pack, Rational(1)), phi_prime(e, g0, pack, Rational(1))));
  }
}

TEST_CASE("Phi'' side by side with the pipeline") {
  const auto pack = synthetic_pack();
  const auto g0 = Counterfunction::constant(0);
  const auto r = phi_double_prime_full(Rational(24), g0, pack, Rational(1));
  // eps/3 = 8: n1_hat = n1 = 1, d = 2, g^ = const 1 so g^_d = const (d + n1_hat + 2) = 5,
  // (g^_d)_f(n) = 2(n + 5) - n = n + 10, iterator n -> 2n + 12
  CHECK(r.constants.n1_hat == r.constants.n1);
  const BigFloat et = (1 - boost::multiprecision::exp(BigFloat(-1))) / 2;
  const long count = static_cast<long>(boost::multiprecision::ceil(16 / (et * et)).convert_to<double>());
  Nat x = 1;
  for (long k = 0; k < count; ++k) x = 2 * x + 12;
  CHECK(*r.value.exact() == 2 * (x + 4));
  CHECK(*r.psi.exact() == x);
  const auto gd = transform_gd(transform_ghat(pack, g0), Bound(4));
  for (std::uint64_t n = 0; n < 20; ++n) CHECK(gd.at(n) == 5);
}

TEST_CASE("Delta with a Lipschitz modulus") {
  const auto pack = synthetic_pack();
  const auto g0 = Counterfunction::constant(0);
  const auto omega = lipschitz_omega(Rational(2));
  // eps = 24, M = 1: min{8, 24/3/2} = 4, b = f(1* + 1) = f(1) = 2
  CHECK(delta_eps(Rational(24), Rational(1), omega) == 4);
  CHECK(b_constant(Rational(24), Rational(1), pack) == Bound(2));
  const auto gb = transform_gb(g0, Bound(2));
  for (std::uint64_t n = 0; n < 10; ++n) CHECK(gb.at(n) == 2);
  const auto r = delta_bound_full(Rational(24), g0, pack, Rational(1), omega);
  const Bound expect = add(phi(Rational(4), gb, pack, Rational(1)), Bound(2));
  CHECK(same_value(r.value, expect));
  CHECK(*r.constants.b == Bound(2));
  const auto id = [](const Rational& e) { return e; };
  CHECK(delta_eps(Rational(1), Rational(2), id) == Rational(1, 6));
  CHECK(delta_eps(Rational(1), Rational(1), id) == Rational(1, 3));
  CHECK_THROWS_AS(delta_bound(Rational(1), g0, pack, Rational(1), {}), ConfigError);
}

TEST_CASE("D_const policy is configurable and recorded") {
  const auto pack = synthetic_pack();
  const auto g0 = Counterfunction::constant(0);
  RateOptions opt;
  opt.d_const_from_drate = true;
  const auto a = phi_full(Rational(8), g0, pack, Rational(1), opt);
  const auto b = phi_full(Rational(8), g0, pack, Rational(1));
  CHECK(definitely_le(b.value, a.value));
  CHECK(a.value != b.value);
  const auto& notes = a.constants.notes;
  CHECK(std::any_of(notes.begin(), notes.end(),
                    [](const std::string& s) { return s.find("max{M, d_rate}") != std::string::npos; }));
  RateOptions custom;
  custom.psi = [](const Interval&, const Counterfunction&) { return Bound(1); };
  CHECK(*phi(Rational(8), g0, pack, Rational(1), custom).exact() == 2 * (1 + 4));
}

TEST_CASE("forced magnitude mode stays above the exact value") {
  const auto g0 = Counterfunction::constant(0);
  std::vector<std::pair<ModuliPack, Rational>> cases{{synthetic_pack(), Rational(8)},
                                                     {synthetic_pack(3, 2), Rational(5)},
                                                     {synthetic_pack(2, 0, 3), Rational(16)}};
  for (const auto& [pack, eps] : cases) {
    const Bound exact = phi(eps, g0, pack, Rational(1));
    REQUIRE(exact.is_exact());
    Bound forced;
    {
      ScopedDigitCap cap(8);
      forced = phi(eps, g0, pack, Rational(1));
    }
    INFO(exact.summary() << " vs " << forced.summary());
    CHECK(forced.level() >= 1);
    CHECK(compare(forced, exact) != Ordering::less);
    CHECK(compare(exact, forced) != Ordering::greater);
  }
}

TEST_CASE("pipeline is deterministic including provenance") {
  const auto pack = ex1_pack(Rational(1, 2), Rational(1, 4));
  const auto a = phi(Rational(1, 2), Counterfunction::identity(), pack, Rational(2));
  const auto b = phi(Rational(1, 2), Counterfunction::identity(), pack, Rational(2));
  CHECK(a == b);
  CHECK(a.provenance() == b.provenance());
  CHECK(to_json(a) == to_json(b));
}
