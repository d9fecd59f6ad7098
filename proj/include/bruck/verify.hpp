// Empirical metastability: witness search over trajectories and path points,
// comparison against the rate bounds, and the scenario suite.
#pragma once

#include "bruck/dsl.hpp"
#include "bruck/iterate.hpp"
#include "bruck/rates.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace bruck {

enum class PredicateKind { cauchy, thm35, thm37, thm38 };

inline std::string to_string(PredicateKind k) {
  switch (k) {
    case PredicateKind::cauchy: return "cauchy";
    case PredicateKind::thm35: return "thm35";
    case PredicateKind::thm37: return "thm37";
    case PredicateKind::thm38: return "thm38";
  }
  return "?";
}

inline PredicateKind parse_predicate_kind(const std::string& s) {
  for (auto k : {PredicateKind::cauchy, PredicateKind::thm35, PredicateKind::thm37, PredicateKind::thm38}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown predicate set '" + s + "' (cauchy|thm35|thm37|thm38)");
}

/// The window predicates. Every check is "value <= eps"; values that depend
/// on a solved path point are inflated by its error bound.
struct PredicateSet {
  PredicateKind kind = PredicateKind::cauchy;
  Rational eps = 1;

  /// Component names, in evaluation order (cheap ones first).
  ///   x_x:   max |x_i - x_j|            x_Tx: |x_i - T x_i|
  ///   x_y:   |x_i - y_i|                y_Ty: |y_i - T y_i|
  ///   x_yf:  |x_i - y_f(i*)|            yf_yf: max |y_f(i*) - y_f(j*)|
  std::vector<std::string> components() const {
    switch (kind) {
      case PredicateKind::cauchy: return {"x_x"};
      case PredicateKind::thm35: return {"x_yf", "yf_yf"};
      case PredicateKind::thm37: return {"x_x", "x_y", "y_Ty"};
      case PredicateKind::thm38: return {"x_x", "x_Tx"};
    }
    return {};
  }

  /// The rate functional whose conclusion this predicate set is.
  std::string functional() const {
    switch (kind) {
      case PredicateKind::cauchy: return "phi_prime";
      case PredicateKind::thm35: return "phi";
      case PredicateKind::thm37: return "phi_double_prime";
      case PredicateKind::thm38: return "delta";
    }
    return "";
  }
};

namespace detail {

/// Running maximum of a lazily computed sequence over windows [lo, hi].
/// Cheap when lo and hi are nondecreasing between queries; otherwise it restarts.
class WindowMax {
 public:
  template <class F>
  double query(std::uint64_t lo, std::uint64_t hi, F&& value) {
    if (dq_.empty() && end_ == 0) end_ = lo - 1;
    if (hi < end_ || lo < start_ || lo > end_ + 1) {
      dq_.clear();
      end_ = lo - 1;
    }
    start_ = lo;
    for (std::uint64_t i = end_ + 1; i <= hi; ++i) {
      const double v = value(i);
      while (!dq_.empty() && dq_.back().second <= v) dq_.pop_back();
      dq_.emplace_back(i, v);
    }
    end_ = std::max(end_, hi);
    while (!dq_.empty() && dq_.front().first < lo) dq_.pop_front();
    return dq_.front().second;
  }

 private:
  std::deque<std::pair<std::uint64_t, double>> dq_;
  std::uint64_t start_ = 0;
  std::uint64_t end_ = 0;
};

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Diameter of a planar point set via its convex hull.
inline double planar_diameter(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  if (pts.size() < 3) return pts.size() == 2 ? distance(pts[0], pts[1]) : 0.0;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, distance(hull[i], hull[j]));
  }
  return best;
}

}  // namespace detail

struct WitnessOptions {
  std::uint64_t search_limit = 1000000;
  /// Largest trajectory index ever materialized.
  std::uint64_t index_cap = 10000000;
  std::uint64_t block = 100000;
  /// Pair budget for exact diameters in dimension >= 3.
  std::uint64_t pair_budget = 50000000;
  PathOptions path;
};

struct WindowEval {
  bool holds = false;
  bool indeterminate = false;
  std::map<std::string, double> window_max;
};

struct WitnessResult {
  std::optional<std::uint64_t> witness;
  std::uint64_t search_limit = 0;
  std::uint64_t scanned = 0;
  std::string stop_reason;
  std::map<std::string, double> window_max;
  double slack = 0.0;
  std::uint64_t trajectory_length = 0;
  std::uint64_t path_solves = 0;
  std::uint64_t indeterminate_windows = 0;

  std::map<std::string, double> margins(const Rational& eps) const {
    std::map<std::string, double> m;
    const double e = to_double(eps, false);
    for (const auto& [k, v] : window_max) m[k] = e - v;
    return m;
  }
};

/// Witness search for one scenario. Holds lazily filled per-index values.
class WitnessSearch {
 public:
  WitnessSearch(const OperatorSpec& T, const DomainSpec& D, const ModuliPack& pack, Trajectory& traj,
                PredicateSet preds, Counterfunction g, WitnessOptions opt = {})
      : T_(T), D_(D), pack_(pack), traj_(traj), preds_(std::move(preds)), g_(std::move(g)),
        opt_(opt), paths_(T, D, pack, traj.anchor(), opt.path), L_(lipschitz_for(T, D)) {
    if (!(preds_.eps > 0)) throw ConfigError("witness search needs eps > 0");
    eps_ = to_double(preds_.eps, false);
    const int dim = traj_.dim();
    if (dim == 1) {
      dirs_.push_back(Point::Ones(1));
    } else if (dim == 2) {
      for (int k = 0; k < kPlanarDirections; ++k) {
        const double a = std::numbers::pi * k / kPlanarDirections;
        dirs_.push_back(make_point({std::cos(a), std::sin(a)}));
      }
    } else {
      for (int k = 0; k < dim; ++k) dirs_.push_back(Point::Unit(dim, k));
    }
    hi_.resize(dirs_.size());
    lo_.resize(dirs_.size());
  }

  const PredicateSet& predicates() const { return preds_; }
  std::uint64_t path_solves() const { return solves_; }
  double slack() const { return slack_; }

  /// Materializes x up to index e; false when e is beyond the index cap.
  bool ensure(std::uint64_t e) {
    if (e > opt_.index_cap) return false;
    if (e > traj_.last()) {
      const std::uint64_t want = std::min(opt_.index_cap, std::max(e, traj_.last() + opt_.block));
      extend(traj_, T_, D_, pack_, want - traj_.last());
    }
    return true;
  }

  /// Evaluates the predicate set on [n, n + g(n)]. Stops at the first failing component.
  WindowEval evaluate(std::uint64_t n, bool all_components = false) {
    WindowEval w;
    const std::uint64_t e = window_end(n);
    if (!ensure(e)) throw Error("window end beyond the index cap");
    w.holds = true;
    for (const auto& c : preds_.components()) {
      double v;
      bool ind = false;
      if (c == "x_x") {
        v = diameter(n, e, ind);
      } else if (c == "yf_yf") {
        v = yf_diameter(n, e);
      } else {
        v = per_index_[c].query(n, e, [&](std::uint64_t i) { return value(c, i); });
      }
      w.window_max[c] = v;
      if (ind) {
        w.indeterminate = true;
        w.holds = false;
      } else if (!(v <= eps_)) {
        w.holds = false;
      }
      if (!w.holds && !all_components) break;
    }
    return w;
  }

  WitnessResult search() {
    WitnessResult r;
    r.search_limit = opt_.search_limit;
    for (std::uint64_t n = 1; n <= opt_.search_limit; ++n) {
      const auto gn = g_.try_at(n);
      if (!gn || n + *gn > opt_.index_cap) {
        r.stop_reason = "window [" + std::to_string(n) + ", n + g(n)] passes the index cap " +
                        std::to_string(opt_.index_cap);
        break;
      }
      r.scanned = n;
      const WindowEval w = evaluate(n);
      if (w.indeterminate) ++r.indeterminate_windows;
      if (w.holds) {
        r.witness = n;
        r.window_max = evaluate(n, true).window_max;
        r.stop_reason = "witness found";
        break;
      }
    }
    if (r.stop_reason.empty()) r.stop_reason = "search limit reached";
    r.slack = slack_;
    r.trajectory_length = traj_.last();
    r.path_solves = solves_;
    return r;
  }

  std::uint64_t window_end(std::uint64_t n) const { return n + g_.at(n); }

  /// Per-index value of a component.
  double value(const std::string& c, std::uint64_t i) {
    auto& cache = values_[c];
    if (cache.size() <= i) cache.resize(std::max<std::size_t>(i + 1, 2 * cache.size()), NAN);
    if (!std::isnan(cache[i])) return cache[i];
    const Point x = traj_.x(i);
    double v = 0.0;
    if (c == "x_Tx") {
      v = (x - T_.eval(x)).norm();
    } else if (c == "x_y" || c == "y_Ty") {
      const PathPoint& y = path(i);
      const double err = y.error_bound();
      v = c == "x_y" ? distance(x, y.y) + err : (y.y - T_.eval(y.y)).norm() + (1 + L_) * err;
    } else if (c == "x_yf") {
      const Nat fs = pack_.f(pack_.f.star(Nat(i)));
      if (fs < 1) {
        v = std::numeric_limits<double>::infinity();
      } else {
        const PathPoint& y = paths_.at(fs.convert_to<std::uint64_t>());
        note_slack(y.error_bound());
        v = distance(x, y.y) + y.error_bound();
      }
    } else {
      throw Error("unknown predicate component " + c);
    }
    cache[i] = v;
    return v;
  }

 private:
  static constexpr int kPlanarDirections = 32;

  const PathPoint& path(std::uint64_t i) {
    if (i >= ys_.size()) ys_.resize(std::max<std::size_t>(i + 1, 2 * ys_.size()));
    if (!ys_[i]) {
      ys_[i] = path_point(T_, D_, pack_, i, traj_.anchor(), opt_.path);
      ++solves_;
      note_slack(ys_[i]->error_bound());
    }
    return *ys_[i];
  }

  void note_slack(double e) { slack_ = std::max(slack_, e); }

  /// max |x_i - x_j| over the window; `ind` set when it cannot be settled.
  double diameter(std::uint64_t n, std::uint64_t e, bool& ind) {
    const int dim = traj_.dim();
    double lower = 0.0;
    double sq = 0.0;
    for (std::size_t k = 0; k < dirs_.size(); ++k) {
      const Point& u = dirs_[k];
      const double mx = hi_[k].query(n, e, [&](std::uint64_t i) { return u.dot(traj_.x(i)); });
      const double mn = -lo_[k].query(n, e, [&](std::uint64_t i) { return -u.dot(traj_.x(i)); });
      lower = std::max(lower, mx - mn);
      sq += (mx - mn) * (mx - mn);
    }
    if (dim == 1) return lower;
    const double upper = dim == 2 ? lower / std::cos(std::numbers::pi / (2 * kPlanarDirections)) : std::sqrt(sq);
    if (upper <= eps_ || lower > eps_) return upper <= eps_ ? upper : lower;
    // ambiguous: exact diameter
    if (dim == 2) {
      std::vector<Point> pts;
      pts.reserve(e - n + 1);
      for (std::uint64_t i = n; i <= e; ++i) pts.emplace_back(traj_.x(i));
      return detail::planar_diameter(std::move(pts));
    }
    const std::uint64_t w = e - n + 1;
    if (w * (w - 1) / 2 > opt_.pair_budget) {
      ind = true;
      return upper;
    }
    double best = 0.0;
    for (std::uint64_t i = n; i <= e; ++i) {
      for (std::uint64_t j = i + 1; j <= e; ++j) best = std::max(best, (traj_.x(i) - traj_.x(j)).norm());
    }
    return best;
  }

  /// max |y_f(i*) - y_f(j*)| for i, j in the window.
  double yf_diameter(std::uint64_t n, std::uint64_t e) {
    const Nat a = pack_.f.star(Nat(n));
    const Nat b = pack_.f.star(Nat(e));
    std::vector<Point> ys;
    for (Nat k = a; k <= b; ++k) {
      const Nat fk = pack_.f(k);
      if (fk < 1) return std::numeric_limits<double>::infinity();
      const PathPoint& y = paths_.at(fk.convert_to<std::uint64_t>());
      note_slack(y.error_bound());
      ys.push_back(y.y);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      for (std::size_t j = i + 1; j < ys.size(); ++j) best = std::max(best, distance(ys[i], ys[j]));
    }
    return best + 2 * slack_;
  }

  const OperatorSpec& T_;
  const DomainSpec& D_;
  const ModuliPack& pack_;
  Trajectory& traj_;
  PredicateSet preds_;
  Counterfunction g_;
  WitnessOptions opt_;
  PathCache paths_;
  double L_;
  double eps_ = 0.0;
  std::vector<Point> dirs_;
  std::vector<detail::WindowMax> hi_, lo_;
  std::map<std::string, detail::WindowMax> per_index_;
  std::map<std::string, std::vector<double>> values_;
  std::vector<std::optional<PathPoint>> ys_;
  std::uint64_t solves_ = 0;
  double slack_ = 0.0;
};

/// Convenience wrapper: a fresh search over an existing trajectory.
inline WitnessResult find_witness(const OperatorSpec& T, const DomainSpec& D, const ModuliPack& pack,
                                  Trajectory& traj, const PredicateSet& preds, const Counterfunction& g,
                                  const WitnessOptions& opt = {}) {
  return WitnessSearch(T, D, pack, traj, preds, g, opt).search();
}

// ---------------------------------------------------------------------------
// Witness against bound

struct BoundComparison {
  /// witness<=bound | witness<=bound (by estimate) | witness>bound | indeterminate |
  /// no-witness-within-search-limit
  std::string status;
  std::string detail;

  bool violated() const { return status == "witness>bound"; }
};

inline BoundComparison check_against_bound(const std::optional<std::uint64_t>& witness, const Bound& bound) {
  if (!witness) return {"no-witness-within-search-limit", "bound claim untested, not falsified"};
  const Bound w(*witness);
  if (bound.is_exact() && !bound.upper_only()) {
    if (*w.exact() <= *bound.exact()) return {"witness<=bound", "exact comparison"};
    return {"witness>bound", "exact comparison: " + std::to_string(*witness) + " > " + bound.summary()};
  }
  const Ordering o = compare(w, bound);
  if (o == Ordering::less || o == Ordering::equal) {
    return {"witness<=bound (by estimate)", "bound is an upper estimate " + bound.summary()};
  }
  return {"indeterminate", "witness not below the estimate " + bound.summary() +
                               "; an estimate alone never establishes a violation"};
}

// ---------------------------------------------------------------------------
// Scenarios and the suite

struct Scenario {
  std::string name;
  OperatorSpec op;
  DomainSpec domain;
  ModuliPack pack;
  Point x1;
  Point z;
  PredicateSet preds;
  std::string g_expr = "id";
  WitnessOptions witness;
  RateOptions rates;
  bool compute_bound = true;
  bool run_audits = true;
  AuditOptions audit;
  std::size_t descent_pairs = 100;
  std::uint64_t seed = 1;

  /// M for the rate functionals: the domain's diameter bound, at least 1.
  Rational rate_M() const {
    const Rational m = to_rational(Real(domain.M));
    return m < 1 ? Rational(1) : m;
  }

  nlohmann::json descriptor() const {
    auto vec = [](const Point& p) {
      std::vector<double> v(p.data(), p.data() + p.size());
      return v;
    };
    return {{"name", name},
            {"operator", op.name()},
            {"domain", domain.describe()},
            {"M", domain.M},
            {"family", pack.family},
            {"x1", vec(x1)},
            {"z", vec(z)},
            {"predicate", to_string(preds.kind)},
            {"eps", to_string(preds.eps)},
            {"g", g_expr},
            {"search_limit", witness.search_limit},
            {"index_cap", witness.index_cap}};
  }
};

struct VerificationReport {
  nlohmann::json scenario;
  WitnessResult result;
  std::optional<Bound> bound;
  std::string functional;
  BoundComparison comparison;
  nlohmann::json audits = nlohmann::json::object();
  std::string status = "fail";  // pass | inconclusive | fail
  std::vector<std::string> notes;
  std::optional<std::string> error;
  double runtime_ms = 0.0;
  Rational eps;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["witness"] = result.witness ? nlohmann::json(*result.witness) : nlohmann::json(nullptr);
    j["search_limit"] = result.search_limit;
    j["stop_reason"] = result.stop_reason;
    j["bound"] = bound ? bruck::to_json(*bound) : nlohmann::json(nullptr);
    j["functional"] = functional;
    j["bound_comparison"] = {{"status", comparison.status}, {"detail", comparison.detail}};
    nlohmann::json margins = nlohmann::json::object();
    for (const auto& [k, v] : result.margins(eps)) margins[k] = v;
    j["margins"] = margins;
    j["slack"] = result.slack;
    j["audits"] = audits;
    j["status"] = status;
    j["notes"] = notes;
    if (error) j["error"] = *error;
    j["stats"] = {{"runtime_ms", runtime_ms},
                  {"scanned", result.scanned},
                  {"trajectory_length", result.trajectory_length},
                  {"path_solves", result.path_solves},
                  {"indeterminate_windows", result.indeterminate_windows}};
    return j;
  }
};

/// The rate bound matching a predicate set.
inline Bound scenario_bound(const Scenario& s, const Counterfunction& g) {
  const Rational M = s.rate_M();
  const Rational& eps = s.preds.eps;
  switch (s.preds.kind) {
    case PredicateKind::cauchy: return phi_prime(eps, g, s.pack, M, s.rates);
    case PredicateKind::thm35: return phi(eps, g, s.pack, M, s.rates);
    case PredicateKind::thm37: return phi_double_prime(eps, g, s.pack, M, s.rates);
    case PredicateKind::thm38: {
      const double L = lipschitz_for(s.op, s.domain);
      Rational Lr = to_rational(Real(L));
      if (Lr < 1) Lr = 1;
      return delta_bound(eps, g, s.pack, M, lipschitz_omega(Lr), s.rates);
    }
  }
  throw Error("unreachable");
}

inline VerificationReport run_scenario(const Scenario& s,
                                       std::map<std::string, nlohmann::json>* audit_cache = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  VerificationReport rep;
  rep.scenario = s.descriptor();
  rep.functional = s.preds.functional();
  rep.eps = s.preds.eps;
  rep.result.search_limit = s.witness.search_limit;
  bool failed = false;
  try {
    const Counterfunction g = parse_counterfunction(s.g_expr).build();
    Trajectory traj = run_bruck(s.op, s.domain, s.pack, s.x1, s.z,
                                std::min(s.witness.block, s.witness.index_cap));
    WitnessSearch search(s.op, s.domain, s.pack, traj, s.preds, g, s.witness);
    rep.result = search.search();
    std::string comps;
    for (const auto& c : s.preds.components()) comps += (comps.empty() ? "" : ",") + c;
    rep.notes.push_back("evaluated predicate components: " + comps);
    if (s.compute_bound) {
      try {
        rep.bound = scenario_bound(s, g);
        rep.comparison = check_against_bound(rep.result.witness, *rep.bound);
        if (rep.comparison.violated()) failed = true;
      } catch (const Error& e) {
        rep.notes.push_back(std::string("bound not computed: ") + e.what());
        rep.comparison = {"indeterminate", "no bound"};
      }
    } else {
      rep.comparison = rep.result.witness ? BoundComparison{"indeterminate", "bound not requested"}
                                          : check_against_bound(std::nullopt, Bound(0));
    }
    if (s.run_audits) {
      const std::string key = s.pack.family;
      nlohmann::json pairing;
      if (audit_cache && audit_cache->count(key)) {
        pairing = audit_cache->at(key);
      } else {
        pairing = audit_acceptably_paired(s.pack, s.audit).to_json();
        if (audit_cache) (*audit_cache)[key] = pairing;
      }
      bool pairing_fail = false;
      for (const auto& c : pairing["conditions"]) {
        if (c.value("kind", "") != "theorem_hypothesis" && c["status"] == "fail") pairing_fail = true;
      }
      rep.audits["acceptably_paired"] = pairing;
      PathCache paths(s.op, s.domain, s.pack, s.z, s.witness.path);
      std::mt19937_64 rng(s.seed);
      std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
      const std::uint64_t last = traj.last();
      for (std::size_t k = 0; k < s.descent_pairs; ++k) {
        const std::uint64_t i = 1 + rng() % last;
        pairs.emplace_back(i + rng() % (last - i + 1), i);
      }
      const auto descent = audit_descent_inequality(traj, paths, s.pack, s.domain.M, pairs);
      rep.audits["descent"] = descent.to_json();
      if (pairing_fail) {
        failed = true;
        rep.notes.push_back("acceptable-pairing audit failed");
      }
      if (descent.any_fail()) {
        failed = true;
        rep.notes.push_back("descent-inequality audit failed");
      }
    }
  } catch (const Error& e) {
    rep.error = e.what();
    failed = true;
  }
  if (failed) rep.status = "fail";
  else rep.status = rep.result.witness ? "pass" : "inconclusive";
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// Runs scenarios in input order. Pairing audits are shared between scenarios
/// with the same pack.
inline std::vector<VerificationReport> run_suite(const std::vector<Scenario>& scenarios) {
  std::vector<VerificationReport> out;
  std::map<std::string, nlohmann::json> audits;
  for (const auto& s : scenarios) out.push_back(run_scenario(s, &audits));
  return out;
}

inline bool any_failed(const std::vector<VerificationReport>& reps) {
  return std::any_of(reps.begin(), reps.end(), [](const auto& r) { return r.status == "fail"; });
}

struct SuiteOptions {
  Rational eps = Rational(1, 20);
  PredicateKind kind = PredicateKind::thm37;
  std::uint64_t search_limit = 1000000;
  std::uint64_t ex2_index_cap = 10000000;
  std::vector<std::string> gs = {"const 10", "id", "affine 2 10"};
  bool compute_bounds = true;
  bool run_audits = true;
  /// Adds the misconfigured x -> 2x scenario.
  bool inject_failure = false;
};

/// {identity, cubic_decay, rotation} x {ex1(1/2,1/4), ex2-truncated} x gs.
inline std::vector<Scenario> default_suite(const SuiteOptions& opt = {}) {
  struct Op {
    OperatorSpec T;
    DomainSpec D;
    Point x1, z;
  };
  const std::vector<Op> ops{
      {OperatorSpec::identity(), DomainSpec::unit_box(2), make_point({0.8, -0.6}), make_point({-0.2, 0.4})},
      {OperatorSpec::cubic_decay(), DomainSpec::box(make_point({0}), 1.0), make_point({0.9}), make_point({0.5})},
      {OperatorSpec::rotation(0.5), DomainSpec::ball(Point::Zero(2), 1.0), make_point({0.5, 0}),
       make_point({0.2, 0.1})}};
  struct Fam {
    std::string name;
    ModuliPack pack;
    std::uint64_t cap;
  };
  ModuliPack ex2 = ex2_pack(true);
  ex2.family = "ex2-truncated";
  const std::vector<Fam> fams{{"ex1(1/2,1/4)", ex1_pack(Rational(1, 2), Rational(1, 4)), 10000000},
                              {"ex2-truncated", ex2, opt.ex2_index_cap}};
  AuditOptions audit;
  audit.n_max = 8;
  audit.eps_grid = {Rational(1), Rational(1, 2)};
  audit.prefix = 1000;
  audit.term_budget = 10000000;
  std::vector<Scenario> out;
  std::uint64_t seed = 1;
  for (const auto& op : ops) {
    for (const auto& fam : fams) {
      for (const auto& g : opt.gs) {
        Scenario s;
        s.name = op.T.name() + "/" + fam.name + "/" + g;
        s.op = op.T;
        s.domain = op.D;
        s.pack = fam.pack;
        s.x1 = op.x1;
        s.z = op.z;
        s.preds = {opt.kind, opt.eps};
        s.g_expr = g;
        s.witness.search_limit = opt.search_limit;
        s.witness.index_cap = fam.cap;
        s.compute_bound = opt.compute_bounds;
        s.run_audits = opt.run_audits;
        s.audit = audit;
        s.seed = seed++;
        out.push_back(std::move(s));
      }
    }
  }
  if (opt.inject_failure) {
    Scenario bad = out[6];  // cubic_decay / ex1 / first g
    bad.name = "scaling(2)/ex1(1/2,1/4)/" + opt.gs.front();
    bad.op = OperatorSpec::scaling(2.0);
    bad.z = make_point({0.5});
    out.push_back(std::move(bad));
  }
  return out;
}

}  // namespace bruck
