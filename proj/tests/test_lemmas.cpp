#include <catch2/catch_amalgamated.hpp>

#include "support/lemma_checks.hpp"

using namespace bruck;
using namespace bruck::testing;

TEST_CASE("subsequence lemma on 50 random instances") {
  std::mt19937_64 rng(33);
  int passed = 0;
  for (int t = 0; t < 50; ++t) {
    const auto r = subsequence_instance(rng, t);
    INFO(r.detail);
    CHECK(r.ok);
    passed += r.ok;
  }
  CHECK(passed == 50);
}

TEST_CASE("star lemma on 50 random instances") {
  std::mt19937_64 rng(34);
  int passed = 0;
  for (int t = 0; t < 50; ++t) {
    const auto r = star_instance(rng, t);
    INFO(r.detail);
    CHECK(r.ok);
    passed += r.ok;
  }
  CHECK(passed == 50);
}

TEST_CASE("g~ values for n^2 with a constant window") {
  ModuliPack pack = synthetic_pack();
  pack.f = MonotoneMap::power(2);
  const auto g = Counterfunction::constant(100);
  const auto gt = transform_gtilde(pack, g);
  CHECK(gt.at(3) == 7);  // floor(sqrt(109)) - 3
  CHECK(gt.at(60) == 0);
}

TEST_CASE("Taylor bracket for (x+1)^r") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ux(1.0, 1e4);
  std::uniform_real_distribution<double> ur(-3.0, 6.0);
  for (int t = 0; t < 10000; ++t) {
    const double x = ux(rng);
    double r = ur(rng);
    if (std::abs(r - 1) < 1e-3) r = 2;
    INFO("x=" << x << " r=" << r);
    CHECK(taylor_gap(x, r) >= 0);
  }
}

TEST_CASE("log(1+x) <= x / sqrt(1+x)") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1e6);
  std::uniform_real_distribution<double> e(-12.0, 6.0);
  double worst = 1.0;
  for (int t = 0; t < 10000; ++t) {
    const double x = t % 2 ? u(rng) : std::pow(10.0, e(rng));
    worst = std::min(worst, log_bound_slack(x));
  }
  CHECK(log_bound_slack(0.0) == 0.0);
  CHECK(worst >= -1e-12);
}
