// Bruck's iteration x_{n+1} = (1-l_n) x_n + l_n T x_n + l_n t_n (z - x_n)
// and the resolvent path y = (1/(1+t)) T y + (t/(1+t)) z.
#pragma once

#include "bruck/hilbert.hpp"
#include "bruck/schedules.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace bruck {

/// Iterates x_1, x_2, ... stored flat (one row of dim doubles per index).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Point x1, Point z) : x1_(std::move(x1)), z_(std::move(z)) {
    check_same_dim(x1_, z_);
    data_.assign(x1_.data(), x1_.data() + x1_.size());
  }

  int dim() const { return static_cast<int>(x1_.size()); }
  /// Largest stored index n (x_1 .. x_n are available).
  std::uint64_t last() const { return dim() == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim()); }

  Eigen::Map<const Point> x(std::uint64_t n) const {
    if (n < 1 || n > last()) {
      throw Error("trajectory index " + std::to_string(n) + " not stored (have 1.." +
                  std::to_string(last()) + ")");
    }
    return Eigen::Map<const Point>(data_.data() + (n - 1) * static_cast<std::size_t>(dim()), dim());
  }
  /// lambda_n and theta_n as used for the step x_n -> x_{n+1}.
  double lambda_used(std::uint64_t n) const { return lambda_.at(n - 1); }
  double theta_used(std::uint64_t n) const { return theta_.at(n - 1); }
  const Point& start() const { return x1_; }
  const Point& anchor() const { return z_; }

  void push(const Point& next, double lambda, double theta) {
    lambda_.push_back(lambda);
    theta_.push_back(theta);
    data_.insert(data_.end(), next.data(), next.data() + next.size());
  }

  void reserve(std::uint64_t points) {
    data_.reserve(points * static_cast<std::size_t>(dim()));
    lambda_.reserve(points);
    theta_.reserve(points);
  }

  /// Largest recurrence residual over the stored steps, recomputed.
  double max_recurrence_residual(const OperatorSpec& T) const {
    double worst = 0.0;
    for (std::uint64_t n = 1; n < last(); ++n) {
      const Point xn = x(n);
      const double l = lambda_used(n);
      const double t = theta_used(n);
      const Point expected = (1 - l) * xn + l * T.eval(xn) + l * t * (z_ - xn);
      worst = std::max(worst, (x(n + 1) - expected).norm());
    }
    return worst;
  }

  /// CSV rows n,lambda,theta,x_0.. for n = 1..last (lambda/theta of the
  /// outgoing step; empty for the final point).
  void write_csv(std::ostream& os) const;

 private:
  Point x1_;
  Point z_;
  std::vector<double> data_;
  std::vector<double> lambda_;
  std::vector<double> theta_;
};

namespace detail {

inline void csv_header(std::ostream& os, const char* lead, int dim, const char* var) {
  os << lead;
  for (int k = 0; k < dim; ++k) os << ',' << var << '_' << k;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void Trajectory::write_csv(std::ostream& os) const {
  detail::csv_header(os, "n,lambda,theta", dim(), "x");
  os << '\n';
  for (std::uint64_t n = 1; n <= last(); ++n) {
    os << n << ',';
    if (n < last()) os << detail::fmt17(lambda_used(n)) << ',' << detail::fmt17(theta_used(n));
    else os << ',';
    const auto xn = x(n);
    for (int k = 0; k < dim(); ++k) os << ',' << detail::fmt17(xn[k]);
    os << '\n';
  }
}

inline constexpr double kEscapeTolerance = 1e-9;

/// One Bruck step from x_n.
inline Point bruck_step(const OperatorSpec& T, const Point& x, const Point& z, double lambda,
                        double theta) {
  return (1 - lambda) * x + lambda * T.eval(x) + lambda * theta * (z - x);
}

/// Runs steps from index `from` (x_from given), calling sink(n+1, x_{n+1},
/// lambda_n, theta_n) after each; throws when an iterate leaves the domain.
inline void bruck_stream(const OperatorSpec& T, const DomainSpec& D, const ModuliPack& pack,
                         Point x, const Point& z, std::uint64_t from, std::uint64_t steps,
                         const std::function<void(std::uint64_t, const Point&, double, double)>& sink) {
  for (std::uint64_t n = from; n < from + steps; ++n) {
    const double l = pack.lambda(n);
    const double t = pack.theta(n);
    Point next = bruck_step(T, x, z, l, t);
    if (!D.contains(next, kEscapeTolerance)) {
      throw Error("iterate x_" + std::to_string(n + 1) + " escapes the domain (operator " +
                  T.name() + ", " + D.describe() + ")");
    }
    sink(n + 1, next, l, t);
    x = std::move(next);
  }
}

inline void extend(Trajectory& traj, const OperatorSpec& T, const DomainSpec& D,
                   const ModuliPack& pack, std::uint64_t steps) {
  traj.reserve(traj.last() + steps);
  bruck_stream(T, D, pack, Point(traj.x(traj.last())), traj.anchor(), traj.last(), steps,
               [&](std::uint64_t, const Point& p, double l, double t) { traj.push(p, l, t); });
}

inline Trajectory run_bruck(const OperatorSpec& T, const DomainSpec& D, const ModuliPack& pack,
                            const Point& x1, const Point& z, std::uint64_t steps) {
  if (steps < 1) throw ConfigError("run_bruck needs steps >= 1");
  if (x1.size() != D.dim() || z.size() != D.dim()) throw ConfigError("x1/z dimension mismatch");
  if (!D.contains(x1)) throw ConfigError("x1 is outside the domain");
  if (!D.contains(z)) throw ConfigError("z is outside the domain");
  Trajectory traj(x1, z);
  extend(traj, T, D, pack, steps);
  return traj;
}

/// Same output as run_bruck(...).write_csv(os), one row at a time, so the
/// length is not limited by memory.
inline void stream_bruck_csv(std::ostream& os, const OperatorSpec& T, const DomainSpec& D,
                             const ModuliPack& pack, const Point& x1, const Point& z,
                             std::uint64_t steps) {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (x1.size() != D.dim() || z.size() != D.dim()) throw ConfigError("x1/z dimension mismatch");
  if (!D.contains(x1)) throw ConfigError("x1 is outside the domain");
  if (!D.contains(z)) throw ConfigError("z is outside the domain");
  const int dim = D.dim();
  detail::csv_header(os, "n,lambda,theta", dim, "x");
  os << '\n';
  Point prev = x1;
  auto coords = [&](const Point& p) {
    for (int k = 0; k < dim; ++k) os << ',' << detail::fmt17(p[k]);
    os << '\n';
  };
  bruck_stream(T, D, pack, x1, z, 1, steps, [&](std::uint64_t m, const Point& x, double l, double t) {
    os << (m - 1) << ',' << detail::fmt17(l) << ',' << detail::fmt17(t);
    coords(prev);
    prev = x;
  });
  os << (steps + 1) << ",,";
  coords(prev);
}

// ---------------------------------------------------------------------------
// Resolvent path

struct PathPoint {
  std::uint64_t index = 0;
  double theta = 0.0;
  Point y;
  double residual = 0.0;
  std::uint64_t iterations = 0;
  std::string method;

  /// Bound on |y - y*| from the residual: I - F is theta/(1+theta)-strongly
  /// monotone.
  double error_bound() const { return residual * (1 + theta) / theta; }
};

/// |y - (1/(1+t)) T y - (t/(1+t)) z|
inline double path_residual(const OperatorSpec& T, double theta, const Point& y, const Point& z) {
  return (y - T.eval(y) / (1 + theta) - (theta / (1 + theta)) * z).norm();
}

struct PathOptions {
  double tol = 1e-10;
  std::uint64_t max_iter = 1000000;
  /// Skip the closed-form and scalar solvers.
  bool force_damped = false;
};

inline PathPoint solve_path_point(const OperatorSpec& T, const DomainSpec& D, double theta,
                                  const Point& z, const PathOptions& opt = {}) {
  if (!(theta > 0) || !std::isfinite(theta)) throw ConfigError("path point needs theta > 0");
  if (!(opt.tol > 0)) throw ConfigError("path tolerance must be positive");
  if (!D.contains(z)) throw ConfigError("anchor z is outside the domain");
  PathPoint p;
  p.theta = theta;
  using K = OperatorSpec::Kind;
  const bool direct = !opt.force_damped;
  if (direct && T.kind == K::identity) {
    p.y = z;
    p.method = "closed form";
  } else if (direct && T.kind == K::cubic_decay) {
    // (1+t) y = y - y^3 + t z, coordinatewise: y^3 + t y - t z = 0, increasing in y
    p.y = z;
    p.method = "bisection";
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      double lo = std::min(0.0, z[k]);
      double hi = std::max(0.0, z[k]);
      auto g = [&](double y) { return y * y * y + theta * y - theta * z[k]; };
      for (int it = 0; it < 200 && lo < hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) < 0 ? lo : hi) = mid;
        ++p.iterations;
      }
      p.y[k] = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
    }
  } else if (direct && T.linear()) {
    const auto [L, c] = T.linear_form(D.dim());
    const Matrix A = (1 + theta) * Matrix::Identity(D.dim(), D.dim()) - L;
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) throw Error("path equation is singular for theta = " + std::to_string(theta));
    p.y = lu.solve(c + theta * z);
    p.method = "linear solve";
  } else {
    p.method = "damped iteration";
    const double lt = lipschitz_for(T, D);
    const double mu = theta / (1 + theta);
    const double big_l = 1 + lt / (1 + theta);
    const double alpha = mu / (big_l * big_l);
    Point y = z;
    double best = path_residual(T, theta, y, z);
    Point best_y = y;
    for (std::uint64_t it = 0; it < opt.max_iter && best > opt.tol; ++it) {
      const Point fy = T.eval(y) / (1 + theta) + (theta / (1 + theta)) * z;
      y = y - alpha * (y - fy);
      const double r = path_residual(T, theta, y, z);
      ++p.iterations;
      if (r < best) {
        best = r;
        best_y = y;
      }
    }
    p.y = best_y;
  }
  p.residual = path_residual(T, theta, p.y, z);
  if (!(p.residual <= opt.tol)) {
    throw Error("path solver (" + p.method + ") did not converge: best residual " +
                detail::fmt17(p.residual) + " > tol " + detail::fmt17(opt.tol));
  }
  return p;
}

/// y_i for the pack's theta_i.
inline PathPoint path_point(const OperatorSpec& T, const DomainSpec& D, const ModuliPack& pack,
                            std::uint64_t i, const Point& z, const PathOptions& opt = {}) {
  PathPoint p = solve_path_point(T, D, pack.theta(i), z, opt);
  p.index = i;
  return p;
}

/// Lazily solved y_i, keyed by index.
class PathCache {
 public:
  PathCache(const OperatorSpec& T, const DomainSpec& D, const ModuliPack& pack, Point z,
            PathOptions opt = {})
      : T_(T), D_(D), pack_(pack), z_(std::move(z)), opt_(opt) {}

  const PathPoint& at(std::uint64_t i) {
    auto it = cache_.find(i);
    if (it == cache_.end()) it = cache_.emplace(i, path_point(T_, D_, pack_, i, z_, opt_)).first;
    return it->second;
  }
  std::size_t size() const { return cache_.size(); }
  const std::map<std::uint64_t, PathPoint>& points() const { return cache_; }

 private:
  const OperatorSpec& T_;
  const DomainSpec& D_;
  const ModuliPack& pack_;
  Point z_;
  PathOptions opt_;
  std::map<std::uint64_t, PathPoint> cache_;
};

inline void write_path_csv(std::ostream& os, const std::vector<PathPoint>& pts) {
  const int dim = pts.empty() ? 0 : static_cast<int>(pts.front().y.size());
  detail::csv_header(os, "i,theta", dim, "y");
  os << ",residual,iters\n";
  for (const auto& p : pts) {
    os << p.index << ',' << detail::fmt17(p.theta);
    for (int k = 0; k < dim; ++k) os << ',' << detail::fmt17(p.y[k]);
    os << ',' << detail::fmt17(p.residual) << ',' << p.iterations << '\n';
  }
}

// ---------------------------------------------------------------------------
// Audits of the proof inequalities

namespace detail {

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double t) {
    const double next = sum + t;
    comp += std::abs(sum) >= std::abs(t) ? (sum - next) + t : (t - next) + sum;
    sum = next;
  }
  double value() const { return sum + comp; }
};

inline void record_le(ConditionReport& c, double lhs, double rhs, double slack,
                      const std::string& where) {
  c.record(Interval::of(Real(lhs), Real(lhs)), Interval::of(Real(rhs + slack), Real(rhs + slack)),
           false, where, "numeric");
}

}  // namespace detail

/// Slack from inexact path points: |y - y*| <= e shifts both |x - y|^2
/// terms by at most 2 M e + e^2; 1e-12 covers rounding in the iterates.
inline double path_slack(double M, const PathPoint& p) {
  const double e = p.error_bound();
  return 4 * M * e + 2 * e * e + 1e-12;
}

/// |x_n - y_i|^2 <= exp(-2 t_i S1) |x_i - y_i|^2 + 2M^2 (t_i - t_n) S1 + 4M^2 S2,
/// with S1, S2 the sums of lambda_j, lambda_j^2 over j in [i, n-1].
inline AuditReport audit_descent_inequality(const Trajectory& traj, PathCache& paths,
                                            const ModuliPack& pack, double M,
                                            const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs) {
  AuditReport rep;
  rep.family = pack.family;
  ConditionReport c("descent", "|x_n - y_i|^2 <= exp(-2 theta_i S1)|x_i - y_i|^2 + 2M^2(theta_i - theta_n) S1 + 4M^2 S2");
  double worst_violation = -std::numeric_limits<double>::infinity();
  for (const auto& [n, i] : pairs) {
    if (n < i) throw ConfigError("descent audit needs n >= i");
    if (n > traj.last()) throw ConfigError("descent audit index beyond the trajectory");
    const PathPoint& y = paths.at(i);
    detail::Kahan s1, s2;
    for (std::uint64_t j = i; j < n; ++j) {
      const double l = pack.lambda(j);
      s1.add(l);
      s2.add(l * l);
    }
    const double ti = pack.theta(i);
    const double tn = pack.theta(n);
    const double lhs = (Point(traj.x(n)) - y.y).squaredNorm();
    const double base = (Point(traj.x(i)) - y.y).squaredNorm();
    const double rhs = std::exp(-2 * ti * s1.value()) * base + 2 * M * M * (ti - tn) * s1.value() +
                       4 * M * M * s2.value();
    worst_violation = std::max(worst_violation, lhs - rhs);
    detail::record_le(c, lhs, rhs, path_slack(M, y),
                      "n=" + std::to_string(n) + " i=" + std::to_string(i));
  }
  if (!pairs.empty()) c.worst_lhs = worst_violation;  // here: max of lhs - rhs
  rep.conditions.push_back(std::move(c));
  return rep;
}

/// The subsequence form with i = f(k), n = f(k+1):
/// |x_f(k+1) - y_f(k)|^2 <= exp(-2 t S) exp(2 t l_f(k+1)) |x_f(k) - y_f(k)|^2
///                          + 2M^2 (t_f(k) - t_f(k+1)) S + 4M^2 S2,
/// S, S2 over j in [f(k), f(k+1)].
inline AuditReport audit_subsequence_inequality(const Trajectory& traj, PathCache& paths,
                                                const ModuliPack& pack, double M,
                                                const std::vector<std::uint64_t>& ks) {
  AuditReport rep;
  rep.family = pack.family;
  ConditionReport c("subsequence", "descent inequality along i = f(k), n = f(k+1)");
  for (std::uint64_t k : ks) {
    const Nat fk = pack.f(Nat(k));
    const Nat fk1 = pack.f(Nat(k + 1));
    if (fk1 > traj.last()) {
      c.skipped.push_back("k=" + std::to_string(k) + " (f(k+1) = " + fk1.str() + " beyond trajectory)");
      continue;
    }
    const auto i = fk.convert_to<std::uint64_t>();
    const auto n = fk1.convert_to<std::uint64_t>();
    if (i < 1) {
      c.skipped.push_back("k=" + std::to_string(k) + " (f(k) = 0)");
      continue;
    }
    const PathPoint& y = paths.at(i);
    detail::Kahan s1, s2;
    for (std::uint64_t j = i; j <= n; ++j) {
      const double l = pack.lambda(j);
      s1.add(l);
      s2.add(l * l);
    }
    const double ti = pack.theta(i);
    const double tn = pack.theta(n);
    const double lhs = (Point(traj.x(n)) - y.y).squaredNorm();
    const double base = (Point(traj.x(i)) - y.y).squaredNorm();
    const double rhs = std::exp(-2 * ti * s1.value()) * std::exp(2 * ti * pack.lambda(n)) * base +
                       2 * M * M * (ti - tn) * s1.value() + 4 * M * M * s2.value();
    detail::record_le(c, lhs, rhs, path_slack(M, y), "k=" + std::to_string(k));
  }
  rep.conditions.push_back(std::move(c));
  return rep;
}

}  // namespace bruck
