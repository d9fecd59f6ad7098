#include <catch2/catch_amalgamated.hpp>

#include "bruck/monotone.hpp"

#include <random>

using namespace bruck;

TEST_CASE("k* by enumeration") {
  const auto ex2 = MonotoneMap::self_power();
  CHECK(ex2.star(Nat(27)) == 3);
  CHECK(ex2.star(Nat(255)) == 3);
  CHECK(ex2.star(Nat(256)) == 4);
  const auto six = MonotoneMap::power(6);
  CHECK(six.star(Nat(100)) == 2);
  CHECK(six.star(Nat(64)) == 2);
  CHECK(six.star(Nat(729)) == 3);
  for (const auto& f : {ex2, six, MonotoneMap::affine(2, 0), MonotoneMap::power_ceil(Rational(3, 2))}) {
    CHECK(f.star(f(Nat(7))) == 7);
  }
}

TEST_CASE("k* inverse laws and agreement with the reference search") {
  const std::vector<MonotoneMap> maps = {MonotoneMap::self_power(), MonotoneMap::power(6),
                                         MonotoneMap::power(2), MonotoneMap::affine(3, 2),
                                         MonotoneMap::power_ceil(Rational(5, 2)),
                                         MonotoneMap::power_ceil(Rational(7, 3))};
  std::mt19937_64 rng(5);
  for (const auto& f : maps) {
    for (int n = 1; n <= 60; ++n) CHECK(f.star(f(Nat(n))) == n);
    for (int i = 0; i < 300; ++i) {
      const Nat k = f.at_zero() + Nat(rng() % 100000000ULL);
      const Nat s = f.star(k);
      CHECK(s == f.star_reference(k));
      CHECK(f(s) <= k);
      CHECK(f(s + 1) > k);
    }
  }
}

TEST_CASE("k* below f(0) is an error") {
  CHECK_THROWS_AS(MonotoneMap::affine(1, 5).star(Nat(3)), Error);
  CHECK_THROWS_AS(MonotoneMap::self_power().star(Nat(0)), Error);
}

TEST_CASE("power_ceil closed forms") {
  const auto f = MonotoneMap::power_ceil(Rational(3, 2));
  CHECK(f(Nat(4)) == 8);
  CHECK(f(Nat(2)) == 3);  // 2.828...
  CHECK(f(Nat(3)) == 6);  // 5.196...
  CHECK(MonotoneMap::power_ceil(Rational(6)).kind() == MonotoneMap::Kind::power);
}

TEST_CASE("apply_monotone examples") {
  const auto ex2 = Counterfunction::of_map(MonotoneMap::self_power());
  CHECK(*apply_monotone(ex2, Bound(4)).exact() == 256);
  const auto six = Counterfunction::of_map(MonotoneMap::power(6));
  CHECK(*apply_monotone(six, Bound::promote(Nat(1000000000))).exact() == mp::pow(Nat(10), 54u));
  const Bound big = apply_monotone(ex2, Bound::magnitude_of(1, 1e6));
  CHECK(big.level() == 2);
  CHECK(big.upper_only());
  // ln ln(n^n) = ln(n ln n) = ln n + ln ln n
  CHECK(big.magnitude()->value >= 1e6 + std::log(1e6));
  CHECK(big.magnitude()->value <= 1e6 + std::log(1e6) + 1e-6);
  const Counterfunction rough("rough", [](const Bound& n) { return n; }, {});
  CHECK_THROWS_AS(apply_monotone(rough, Bound(1)), Error);
}

TEST_CASE("magnitude k* is an upper estimate") {
  ScopedDigitCap cap(30);
  const auto six = MonotoneMap::power(6);
  const Nat k = mp::pow(Nat(10), 40u) + 12345;
  const Bound est = six.star(Bound::promote(k));
  REQUIRE(Bound::promote(k).level() == 1);
  const Nat exact = six.star(k);
  CHECK(definitely_le(Bound::promote(exact), est));
}

TEST_CASE("iterate_fn small exact runs") {
  CHECK(*iterate_fn(Counterfunction::successor(), Bound(1), Bound(5)).exact() == 6);
  const Bound r = iterate_fn(Counterfunction::affine(2, 10), Bound(1), Bound(161));
  REQUIRE(r.is_exact());
  // closed form of a -> 2a + 10 from 1: 11 * 2^k - 10
  CHECK(*r.exact() == 11 * (Nat(1) << 161) - 10);
  CHECK(*iterate_fn(Counterfunction::identity(), Bound(4), Bound(0)).exact() == 4);
}

TEST_CASE("iterate_fn rejects maps below successor") {
  CHECK_THROWS_AS(iterate_fn(Counterfunction::identity(), Bound(1), Bound(3)), Error);
  CHECK_THROWS_AS(iterate_fn(Counterfunction::constant(3), Bound(1), Bound(5)), Error);
}

TEST_CASE("iterate_fn long runs use the fast path") {
  const Bound r = iterate_fn(Counterfunction::successor(), Bound(1), Bound(50000000));
  REQUIRE(r.is_exact());
  CHECK(*r.exact() == 50000001);
}

TEST_CASE("iterate_fn f(n+6) with f = n^6 for 10^5 steps is level 2") {
  const auto g = Counterfunction::compose(Counterfunction::of_map(MonotoneMap::power(6)),
                                          Counterfunction::affine(1, 6));
  // digits(n_{k+1}) <= 6 digits(n_k) + c on the materializable prefix
  Nat x = 1;
  for (int k = 0; k < 5; ++k) {
    const Nat y = mp::pow(x + 6, 6u);
    CHECK(decimal_digits(y) <= 6 * decimal_digits(x) + 6);
    CHECK(*g(Bound::promote(x)).exact() == y);
    x = y;
  }
  const Bound r = iterate_fn(g, Bound(1), Bound(100000));
  REQUIRE(r.level() == 2);
  const double expected = 1e5 * std::log(6.0);
  CHECK(r.magnitude()->value >= expected);
  CHECK(r.magnitude()->value <= expected + 10.0);
  CHECK(r.upper_only());
}

TEST_CASE("iterate_fn envelope jump dominates stepping") {
  const auto g = Counterfunction::compose(Counterfunction::of_map(MonotoneMap::power(3)),
                                          Counterfunction::affine(1, 2));
  IterateOptions stepwise;
  stepwise.magnitude_steps = 1000000;
  IterateOptions early;
  early.magnitude_steps = 2;
  const Bound a = iterate_fn(g, Bound(1), Bound(60), stepwise);
  const Bound b = iterate_fn(g, Bound(1), Bound(60), early);
  CHECK(compare(a, b) != Ordering::greater);
}

TEST_CASE("iterate_fn level-shift extrapolation for n^n") {
  const auto g = Counterfunction::compose(Counterfunction::of_map(MonotoneMap::self_power()),
                                          Counterfunction::affine(2, 0));
  const Bound r = iterate_fn(g, Bound(3), Bound(1000000));
  REQUIRE_FALSE(r.is_exact());
  CHECK(r.level() > 999000);
  // extrapolation never undercuts the stepped value
  IterateOptions opt;
  opt.magnitude_steps = 100000;
  const Bound few = iterate_fn(g, Bound(3), Bound(40), opt);
  CHECK(few.level() <= 40 + 2);
}

TEST_CASE("envelope algebra") {
  const Envelope six{6.0, 0.0};
  const Envelope shift = Envelope::shift(6);
  const Envelope c = Envelope::compose(six, shift);
  CHECK(c.degree == 6.0);
  CHECK(c.ln_coef >= 6 * std::log(7.0));
  for (double n = 1; n < 1e6; n *= 1.7) {
    CHECK(std::pow(n + 6, 6) <= std::exp(c.ln_coef) * std::pow(n, 6) * (1 + 1e-12));
  }
  const Envelope s = six + Envelope::constant(Nat(5));
  CHECK(s.degree == 6.0);
  CHECK(s.ln_coef >= std::log(6.0));
}
