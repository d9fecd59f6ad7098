#include <catch2/catch_amalgamated.hpp>

#include "bruck/verify.hpp"

#include <random>

using namespace bruck;

namespace {

const DomainSpec kLine = DomainSpec::box(make_point({0}), 1.0);
const ModuliPack kEx1 = ex1_pack(Rational(1, 2), Rational(1, 4));

// max |x_i - x_j| over [lo, hi] by plain pairwise scan
double brute_diameter(const Trajectory& t, std::uint64_t lo, std::uint64_t hi) {
  double best = 0.0;
  for (std::uint64_t i = lo; i <= hi; ++i) {
    for (std::uint64_t j = i + 1; j <= hi; ++j) best = std::max(best, (t.x(i) - t.x(j)).norm());
  }
  return best;
}

// 1D oscillation by a single pass
double osc1(const Trajectory& t, std::uint64_t lo, std::uint64_t hi) {
  double mn = t.x(lo)[0];
  double mx = mn;
  for (std::uint64_t i = lo; i <= hi; ++i) {
    mn = std::min(mn, t.x(i)[0]);
    mx = std::max(mx, t.x(i)[0]);
  }
  return mx - mn;
}

}  // namespace

TEST_CASE("identity with z = x1: every predicate set has witness 1") {
  const auto D = DomainSpec::unit_box(2);
  const Point x1 = make_point({0.3, -0.2});
  for (auto k : {PredicateKind::cauchy, PredicateKind::thm35, PredicateKind::thm37, PredicateKind::thm38}) {
    Trajectory traj = run_bruck(OperatorSpec::identity(), D, kEx1, x1, x1, 10);
    const auto r = find_witness(OperatorSpec::identity(), D, kEx1, traj, {k, Rational(1, 1000)},
                                Counterfunction::affine(3, 5));
    INFO(to_string(k));
    REQUIRE(r.witness);
    CHECK(*r.witness == 1);
    for (const auto& [c, v] : r.window_max) CHECK(v <= 1e-9);
  }
}

TEST_CASE("eps = 2M forces the cauchy witness n = 1") {
  Trajectory traj = run_bruck(OperatorSpec::cubic_decay(), kLine, kEx1, make_point({0.9}), make_point({0.5}), 10);
  const auto r = find_witness(OperatorSpec::cubic_decay(), kLine, kEx1, traj,
                              {PredicateKind::cauchy, Rational(4)}, Counterfunction::power(2));
  REQUIRE(r.witness);
  CHECK(*r.witness == 1);
}

TEST_CASE("cauchy witness for cubic_decay agrees with a brute-force scan") {
  const auto T = OperatorSpec::cubic_decay();
  Trajectory traj = run_bruck(T, kLine, kEx1, make_point({0.9}), make_point({0.5}), 10);
  const PredicateSet preds{PredicateKind::cauchy, Rational(1, 20)};
  const auto g = Counterfunction::identity();
  WitnessSearch search(T, kLine, kEx1, traj, preds, g);
  const auto r = search.search();
  REQUIRE(r.witness);
  const std::uint64_t n = *r.witness;
  INFO("witness " << n);
  CHECK(osc1(traj, n, 2 * n) <= 0.05);
  CHECK(r.window_max.at("x_x") == Catch::Approx(osc1(traj, n, 2 * n)).margin(1e-15));
  // minimality: every earlier window fails
  std::mt19937_64 rng(3);
  for (std::uint64_t m = 1; m < n; ++m) {
    if (m > 1000 && rng() % 200 != 0) continue;
    CHECK(osc1(traj, m, 2 * m) > 0.05);
  }
  // larger eps: the stored window maximum certifies the same n
  for (double e : {0.06, 0.1, 0.5}) CHECK(r.window_max.at("x_x") <= e);
}

TEST_CASE("monotone eps: witnesses do not grow with eps") {
  const auto T = OperatorSpec::cubic_decay();
  std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
  for (auto e : {Rational(1, 50), Rational(1, 20), Rational(1, 10), Rational(1, 2)}) {
    Trajectory traj = run_bruck(T, kLine, kEx1, make_point({0.9}), make_point({0.5}), 10);
    const auto r = find_witness(T, kLine, kEx1, traj, {PredicateKind::cauchy, e}, Counterfunction::constant(20));
    REQUIRE(r.witness);
    CHECK(*r.witness <= prev);
    prev = *r.witness;
  }
}

TEST_CASE("thm37 witness gives a cauchy witness with 3 eps at the same n") {
  const auto T = OperatorSpec::cubic_decay();
  const Rational eps(1, 10);
  Trajectory traj = run_bruck(T, kLine, kEx1, make_point({0.9}), make_point({0.5}), 10);
  const auto g = Counterfunction::constant(50);
  const auto r = find_witness(T, kLine, kEx1, traj, {PredicateKind::thm37, eps}, g);
  REQUIRE(r.witness);
  for (const char* c : {"x_x", "x_y", "y_Ty"}) CHECK(r.window_max.at(c) <= 0.1);
  WitnessSearch cauchy(T, kLine, kEx1, traj, {PredicateKind::cauchy, 3 * eps}, g);
  CHECK(cauchy.evaluate(*r.witness).holds);
  CHECK(r.path_solves > 0);
  CHECK(r.slack < 1e-6);
}

TEST_CASE("thm35 and thm38 witnesses on cubic_decay") {
  const auto T = OperatorSpec::cubic_decay();
  for (auto k : {PredicateKind::thm35, PredicateKind::thm38}) {
    Trajectory traj = run_bruck(T, kLine, kEx1, make_point({0.9}), make_point({0.5}), 10);
    WitnessSearch s(T, kLine, kEx1, traj, {k, Rational(1, 5)}, Counterfunction::constant(5));
    const auto r = s.search();
    INFO(to_string(k));
    REQUIRE(r.witness);
    const auto all = s.evaluate(*r.witness, true);
    CHECK(all.holds);
    // recompute the components by hand at the witness
    const std::uint64_t n = *r.witness;
    for (std::uint64_t i = n; i <= n + 5; ++i) {
      if (k == PredicateKind::thm38) {
        CHECK(std::abs(traj.x(i)[0] - T.eval(Point(traj.x(i)))[0]) <= 0.2);
      } else {
        const Nat fs = kEx1.f(kEx1.f.star(Nat(i)));
        const auto y = path_point(T, kLine, kEx1, fs.convert_to<std::uint64_t>(), make_point({0.5}));
        CHECK(std::abs(traj.x(i)[0] - y.y[0]) <= 0.2 + 1e-9);
      }
    }
  }
}

TEST_CASE("planar diameter and window maxima against brute force") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<Point> pts;
    const int m = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < m; ++i) pts.push_back(make_point({u(rng), u(rng)}));
    double best = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) best = std::max(best, distance(pts[i], pts[j]));
    CHECK(detail::planar_diameter(pts) == Catch::Approx(best).margin(1e-15));
  }
  std::vector<double> vals(500);
  for (auto& v : vals) v = u(rng);
  detail::WindowMax wm;
  std::uint64_t lo = 1;
  std::uint64_t hi = 1;
  for (int q = 0; q < 300; ++q) {
    if (rng() % 7 == 0) lo = 1 + rng() % 400;  // occasional jumps backwards
    else lo += rng() % 3;
    hi = std::max(lo, std::min<std::uint64_t>(499, lo + rng() % 50));
    const double got = wm.query(lo, hi, [&](std::uint64_t i) { return vals[i]; });
    CHECK(got == *std::max_element(vals.begin() + lo, vals.begin() + hi + 1));
  }
}

TEST_CASE("rotation and a 3D box use exact diameters when ambiguous") {
  const auto ball = DomainSpec::ball(Point::Zero(2), 1.0);
  const auto T = OperatorSpec::rotation(0.5);
  Trajectory traj = run_bruck(T, ball, kEx1, make_point({0.5, 0}), make_point({0.2, 0.1}), 10);
  WitnessSearch s(T, ball, kEx1, traj, {PredicateKind::cauchy, Rational(1, 10)}, Counterfunction::constant(30));
  const auto r = s.search();
  REQUIRE(r.witness);
  CHECK(r.window_max.at("x_x") <= brute_diameter(traj, *r.witness, *r.witness + 30) / std::cos(std::numbers::pi / 64) + 1e-15);
  CHECK(brute_diameter(traj, *r.witness, *r.witness + 30) <= 0.1);
  if (*r.witness > 1) CHECK(brute_diameter(traj, *r.witness - 1, *r.witness + 29) > 0.1);

  const auto box3 = DomainSpec::unit_box(3);
  const auto I = OperatorSpec::identity();
  Trajectory t3 = run_bruck(I, box3, kEx1, make_point({0.9, 0.1, -0.5}), make_point({0.8, 0.2, -0.4}), 10);
  const auto r3 = find_witness(I, box3, kEx1, t3, {PredicateKind::cauchy, Rational(1, 100)}, Counterfunction::constant(10));
  REQUIRE(r3.witness);
  CHECK(brute_diameter(t3, *r3.witness, *r3.witness + 10) <= 0.01);
}

TEST_CASE("search limit and index cap stop the search") {
  const auto T = OperatorSpec::cubic_decay();
  Trajectory traj = run_bruck(T, kLine, kEx1, make_point({0.9}), make_point({0.5}), 10);
  WitnessOptions opt;
  opt.search_limit = 5;
  auto r = find_witness(T, kLine, kEx1, traj, {PredicateKind::cauchy, Rational(1, 1000)}, Counterfunction::identity(), opt);
  CHECK_FALSE(r.witness);
  CHECK(r.stop_reason == "search limit reached");
  opt.search_limit = 1000;
  opt.index_cap = 200;
  r = find_witness(T, kLine, kEx1, traj, {PredicateKind::cauchy, Rational(1, 1000)}, Counterfunction::identity(), opt);
  CHECK_FALSE(r.witness);
  CHECK(r.stop_reason.find("index cap") != std::string::npos);
  CHECK(traj.last() <= 200);
}

TEST_CASE("check_against_bound reporting rules") {
  CHECK(check_against_bound(12, Bound::promote(mp::pow(Nat(2), 164))).status == "witness<=bound");
  CHECK(check_against_bound(12, Bound(5)).status == "witness>bound");
  CHECK(check_against_bound(12, Bound(5)).violated());
  const Bound est = Bound::magnitude_of(2, 10.0);
  CHECK(check_against_bound(12, est).status == "witness<=bound (by estimate)");
  CHECK(check_against_bound(12, Bound(5).as_upper_only()).status == "indeterminate");
  CHECK(check_against_bound(std::nullopt, est).status == "no-witness-within-search-limit");
}

TEST_CASE("suite cardinality, ordering and the injected failure") {
  SuiteOptions opt;
  opt.search_limit = 2000;
  opt.ex2_index_cap = 20000;
  opt.compute_bounds = false;
  opt.run_audits = false;
  opt.eps = Rational(1, 5);
  auto scenarios = default_suite(opt);
  CHECK(scenarios.size() == 18);
  CHECK(run_suite({}).empty());
  opt.inject_failure = true;
  scenarios = default_suite(opt);
  REQUIRE(scenarios.size() == 19);
  for (auto& s : scenarios) s.witness.index_cap = std::min<std::uint64_t>(s.witness.index_cap, 20000);
  const auto reps = run_suite(scenarios);
  REQUIRE(reps.size() == 19);
  for (std::size_t i = 0; i < 18; ++i) {
    INFO(reps[i].to_json().dump());
    CHECK(reps[i].scenario["name"] == scenarios[i].name);
    CHECK(reps[i].status != "fail");
  }
  CHECK(reps[18].status == "fail");
  REQUIRE(reps[18].error);
  CHECK(reps[18].error->find("escapes") != std::string::npos);
  CHECK(any_failed(reps));
  const auto j = reps[0].to_json();
  for (const char* k : {"scenario", "witness", "bound", "margins", "audits", "status"}) CHECK(j.contains(k));
}

TEST_CASE("suite scenario with bound and audits") {
  SuiteOptions opt;
  opt.search_limit = 100000;
  opt.eps = Rational(1, 5);
  opt.gs = {"const 10"};
  auto scenarios = default_suite(opt);
  const auto rep = run_scenario(scenarios[2]);  // cubic_decay / ex1
  INFO(rep.to_json().dump(2));
  CHECK(rep.status == "pass");
  REQUIRE(rep.bound);
  CHECK(rep.comparison.status == "witness<=bound (by estimate)");
  CHECK(rep.audits["descent"]["passed"] == true);
  // same inputs, same report apart from timing
  auto a = rep.to_json();
  auto b = run_scenario(scenarios[2]).to_json();
  a.erase("stats");
  b.erase("stats");
  CHECK(a == b);
}
