// Finite-dimensional Hilbert space primitives: points, bounded convex
// domains, and a small catalog of pseudocontractive operators.
#pragma once

#include "bruck/numeric.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bruck {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void check_same_dim(const Point& u, const Point& v) {
  if (u.size() != v.size()) {
    throw Error("dimension mismatch: " + std::to_string(u.size()) + " vs " +
                std::to_string(v.size()));
  }
}

inline double inner(const Point& u, const Point& v) {
  check_same_dim(u, v);
  return u.dot(v);
}

inline double norm(const Point& u) { return u.norm(); }

inline double distance(const Point& u, const Point& v) {
  check_same_dim(u, v);
  return (u - v).norm();
}

inline bool all_finite(const Point& u) { return u.allFinite(); }

inline Point make_point(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

// ---------------------------------------------------------------------------
// Domains

/// Axis-aligned box (center, half-width) or Euclidean ball (center, radius),
/// with a diameter bound M.
struct DomainSpec {
  enum class Kind { box, ball };

  Kind kind = Kind::box;
  Point center = Point::Zero(1);
  double radius = 1.0;  // half-width for boxes
  double M = 2.0;

  static DomainSpec box(Point center, double halfwidth, std::optional<double> m = std::nullopt) {
    return make(Kind::box, std::move(center), halfwidth, m);
  }
  static DomainSpec ball(Point center, double radius, std::optional<double> m = std::nullopt) {
    return make(Kind::ball, std::move(center), radius, m);
  }
  /// The cube [-1, 1]^dim.
  static DomainSpec unit_box(int dim) { return box(Point::Zero(dim), 1.0); }

  int dim() const { return static_cast<int>(center.size()); }

  double true_diameter() const {
    return kind == Kind::box ? 2.0 * radius * std::sqrt(static_cast<double>(dim())) : 2.0 * radius;
  }

  /// Membership, optionally enlarged by tol.
  bool contains(const Point& x, double tol = 0.0) const {
    if (x.size() != center.size() || !x.allFinite()) return false;
    if (kind == Kind::box) return ((x - center).array().abs() <= radius + tol).all();
    return (x - center).norm() <= radius + tol;
  }

  /// Uniform sample from the domain.
  Point sample(std::mt19937_64& rng) const {
    if (kind == Kind::box) {
      std::uniform_real_distribution<double> u(-radius, radius);
      Point p(center.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = center[i] + u(rng);
      return p;
    }
    std::normal_distribution<double> g(0.0, 1.0);
    Point dir(center.size());
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = g(rng);
    const double n = dir.norm();
    if (n == 0.0) return center;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = radius * std::pow(u(rng), 1.0 / static_cast<double>(dim()));
    return center + dir * (r / n);
  }

  std::string describe() const {
    return std::string(kind == Kind::box ? "box" : "ball") + "(dim=" + std::to_string(dim()) +
           ", r=" + std::to_string(radius) + ")";
  }

 private:
  static DomainSpec make(Kind kind, Point center, double r, std::optional<double> m) {
    if (center.size() < 1) throw ConfigError("domain dimension must be >= 1");
    if (!center.allFinite()) throw ConfigError("domain center must be finite");
    if (!(r > 0) || !std::isfinite(r)) throw ConfigError("domain radius must be positive");
    DomainSpec d;
    d.kind = kind;
    d.center = std::move(center);
    d.radius = r;
    const double diam = d.true_diameter();
    // default M: the diameter rounded up to a 1e-6 grid
    if (m && !(*m >= diam)) throw ConfigError("diameter bound M is below the domain's diameter");
    d.M = m ? *m : std::ceil(diam * 1e6) / 1e6;
    while (d.M < diam) d.M = up(d.M);
    return d;
  }
};

// ---------------------------------------------------------------------------
// Operators

/// Descriptor of an operator T on R^dim.
struct OperatorSpec {
  enum class Kind { identity, cubic_decay, rotation, affine, scaling };

  Kind kind = Kind::identity;
  double angle = 0.0;  // rotation, in the (0,1) coordinate plane
  Point pivot;         // rotation center (origin when empty)
  Matrix A;            // affine: x -> A x + b
  Point b;
  double scale = 1.0;  // scaling: x -> scale * x
  std::optional<double> lipschitz_hint;

  static OperatorSpec identity() { return {}; }
  static OperatorSpec cubic_decay() {
    OperatorSpec t;
    t.kind = Kind::cubic_decay;
    return t;
  }
  static OperatorSpec rotation(double angle, Point pivot = Point()) {
    OperatorSpec t;
    t.kind = Kind::rotation;
    t.angle = angle;
    t.pivot = std::move(pivot);
    return t;
  }
  static OperatorSpec affine(Matrix A, Point b) {
    if (A.rows() != A.cols() || A.rows() != b.size()) {
      throw ConfigError("affine operator needs a square matrix matching the offset");
    }
    if (!A.allFinite() || !b.allFinite()) throw ConfigError("affine operator must be finite");
    const double opnorm = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
    if (opnorm > 1.0 + 1e-12) {
      throw ConfigError("affine operator must have operator norm <= 1 (got " +
                        std::to_string(opnorm) + ")");
    }
    OperatorSpec t;
    t.kind = Kind::affine;
    t.A = std::move(A);
    t.b = std::move(b);
    return t;
  }
  /// x -> s x; not pseudocontractive for s > 1 (kept as a counterexample).
  static OperatorSpec scaling(double s) {
    OperatorSpec t;
    t.kind = Kind::scaling;
    t.scale = s;
    return t;
  }

  std::string name() const {
    switch (kind) {
      case Kind::identity: return "identity";
      case Kind::cubic_decay: return "cubic_decay";
      case Kind::rotation: return "rotation";
      case Kind::affine: return "affine";
      case Kind::scaling: return "scaling";
    }
    return "?";
  }

  /// Coordinatewise operators allow a scalar solve per coordinate.
  bool separable() const { return kind == Kind::identity || kind == Kind::cubic_decay; }
  bool linear() const {
    return kind == Kind::rotation || kind == Kind::affine || kind == Kind::scaling ||
           kind == Kind::identity;
  }

  /// Known Lipschitz constant on [-1,1]^dim (or a hint), if any.
  std::optional<double> lipschitz() const {
    if (lipschitz_hint) return lipschitz_hint;
    switch (kind) {
      case Kind::identity:
      case Kind::rotation: return 1.0;
      case Kind::affine: return Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
      case Kind::scaling: return std::abs(scale);
      case Kind::cubic_decay: return std::nullopt;
    }
    return std::nullopt;
  }

  /// Linear part and offset for the linear kinds: T x = L x + c.
  std::pair<Matrix, Point> linear_form(int dim) const {
    Matrix L = Matrix::Identity(dim, dim);
    Point c = Point::Zero(dim);
    switch (kind) {
      case Kind::identity: break;
      case Kind::rotation: {
        L(0, 0) = std::cos(angle);
        L(0, 1) = -std::sin(angle);
        L(1, 0) = std::sin(angle);
        L(1, 1) = std::cos(angle);
        if (pivot.size() == dim) c = pivot - L * pivot;
        break;
      }
      case Kind::affine:
        L = A;
        c = b;
        break;
      case Kind::scaling: L *= scale; break;
      case Kind::cubic_decay: throw Error("cubic_decay has no linear form");
    }
    return {L, c};
  }

  /// T x, without domain checks.
  Point eval(const Point& x) const {
    switch (kind) {
      case Kind::identity: return x;
      case Kind::cubic_decay: return (x.array() - x.array().cube()).matrix();
      case Kind::rotation: {
        if (x.size() < 2) throw Error("rotation needs dimension >= 2");
        const Point p = pivot.size() == x.size() ? pivot : Point::Zero(x.size());
        Point y = x;
        const double u = x[0] - p[0];
        const double v = x[1] - p[1];
        y[0] = p[0] + std::cos(angle) * u - std::sin(angle) * v;
        y[1] = p[1] + std::sin(angle) * u + std::cos(angle) * v;
        return y;
      }
      case Kind::affine:
        check_same_dim(b, x);
        return A * x + b;
      case Kind::scaling: return scale * x;
    }
    return x;
  }
};

/// T x for x in the domain; rejects points outside it and escaping images.
inline Point apply(const OperatorSpec& T, const DomainSpec& D, const Point& x,
                   double tol = 1e-12) {
  if (!D.contains(x, tol)) throw Error("apply: point outside the domain");
  Point y = T.eval(x);
  if (!D.contains(y, tol)) throw Error("apply: " + T.name() + " maps a point outside the domain");
  return y;
}

inline Point apply(const OperatorSpec& T, const Point& x) { return T.eval(x); }

/// max over sampled pairs of <Tu - Tv, u - v> - |u - v|^2.
inline double pseudocontractivity_scan(const OperatorSpec& T, const DomainSpec& D,
                                       std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("pseudocontractivity_scan needs samples >= 1");
  std::mt19937_64 rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const Point u = D.sample(rng);
    const Point v = D.sample(rng);
    const Point d = u - v;
    const Point td = T.eval(u) - T.eval(v);
    worst = std::max(worst, inner(td, d) - inner(d, d));
  }
  return worst;
}

/// Largest sampled ratio |Tu - Tv| / |u - v|; a lower bound on the
/// Lipschitz constant.
inline double lipschitz_estimate(const OperatorSpec& T, const DomainSpec& D, std::size_t samples,
                                 std::uint64_t seed) {
  if (samples < 1) throw ConfigError("lipschitz_estimate needs samples >= 1");
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point u = D.sample(rng);
    const Point v = D.sample(rng);
    const double duv = (u - v).norm();
    if (duv == 0.0) continue;
    best = std::max(best, (T.eval(u) - T.eval(v)).norm() / duv);
  }
  return best;
}

/// Number of sampled domain points whose image leaves the domain.
inline std::size_t self_map_violations(const OperatorSpec& T, const DomainSpec& D,
                                       std::size_t samples, std::uint64_t seed,
                                       double tol = 1e-12) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    if (!D.contains(T.eval(D.sample(rng)), tol)) ++bad;
  }
  return bad;
}

/// Lipschitz constant to use for T on D: the known value, else a seeded
/// estimate with a safety factor.
inline double lipschitz_for(const OperatorSpec& T, const DomainSpec& D) {
  if (auto l = T.lipschitz()) return *l;
  if (T.kind == OperatorSpec::Kind::cubic_decay) {
    // |1 - 3t^2| on the coordinate range of D
    double r = 0.0;
    for (Eigen::Index i = 0; i < D.center.size(); ++i) {
      r = std::max(r, std::abs(D.center[i]) + D.radius);
    }
    return std::max(1.0, std::abs(1.0 - 3.0 * r * r));
  }
  return 1.5 * lipschitz_estimate(T, D, 10000, 0);
}

}  // namespace bruck
