// Flat JSON scenario configuration. Every key has a typed default; files and
// command-line flags override individual keys.
#pragma once

#include "bruck/verify.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bruck {

struct ConfigField {
  enum class Type { text, rational, real, integer, boolean, vector, matrix };
  std::string key;
  Type type;
  nlohmann::json fallback;
  std::string help;
};

inline const std::vector<ConfigField>& config_schema() {
  using T = ConfigField::Type;
  static const std::vector<ConfigField> fields{
      {"op", T::text, "cubic_decay", "identity|cubic_decay|rotation|affine|scaling"},
      {"angle", T::real, 0.5, "rotation angle"},
      {"scale", T::real, 1.0, "scaling factor (scaling operator)"},
      {"matrix", T::matrix, nullptr, "affine matrix, rows separated by ';'"},
      {"offset", T::vector, nullptr, "affine offset"},
      {"domain", T::text, "box", "box|ball"},
      {"dim", T::integer, 1, "dimension"},
      {"radius", T::real, 1.0, "box half-width or ball radius"},
      {"center", T::vector, nullptr, "domain center (origin when unset)"},
      {"M", T::real, nullptr, "diameter bound (computed when unset)"},
      {"family", T::text, "ex1", "ex1|ex2|ex2-truncated|synthetic"},
      {"p", T::rational, "1/2", "ex1 parameter p"},
      {"q", T::rational, "1/4", "ex1 parameter q"},
      {"clamp_theta", T::boolean, false, "ex2: clamp theta to [0,1]"},
      {"f_mul", T::integer, 2, "synthetic: f(n) = f_mul n + f_add"},
      {"f_add", T::integer, 0, "synthetic"},
      {"phi", T::integer, 1, "synthetic: constant moduli value"},
      {"n0", T::integer, 1, "synthetic: n0"},
      {"delta", T::rational, "2", "synthetic: delta"},
      {"x1", T::vector, std::vector<double>{0.9}, "starting point"},
      {"z", T::vector, std::vector<double>{0.5}, "anchor point"},
      {"eps", T::rational, "1/20", "epsilon"},
      {"g", T::text, "id", "counterfunction expression"},
      {"steps", T::integer, 1000, "iteration steps"},
      {"seed", T::integer, 1, "seed for sampled audits"},
      {"tol", T::real, 1e-10, "path solver residual tolerance"},
      {"digit_cap", T::integer, nullptr, "decimal digits before magnitude mode"},
      {"d_const", T::rational, nullptr, "D in the default Psi (M when unset)"},
      {"d_const_policy", T::text, "M", "M|max_M_drate"},
      {"functional", T::text, "phi_double_prime", "phi|phi_prime|phi_double_prime|delta|psi"},
      {"lipschitz", T::rational, nullptr, "Lipschitz constant for omega(eps) = eps/L"},
      {"bound_M", T::rational, nullptr, "M for the rate functionals (domain M when unset)"},
      {"predicate", T::text, "thm37", "cauchy|thm35|thm37|thm38"},
      {"search_limit", T::integer, 1000000, "witness search limit"},
      {"index_cap", T::integer, 10000000, "largest trajectory index"},
      {"nmax", T::integer, 50, "audit: largest n"},
      {"budget", T::integer, 100000000, "audit: direct summation budget"},
  };
  return fields;
}

namespace detail {

inline std::vector<double> parse_vector(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(s);
  return out;
}

inline Point to_point(const std::vector<double>& v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i];
  return p;
}

}  // namespace detail

class ScenarioConfig {
 public:
  ScenarioConfig() {
    for (const auto& f : config_schema()) j_[f.key] = f.fallback;
  }

  static ScenarioConfig from_json(const nlohmann::json& in) {
    ScenarioConfig c;
    if (!in.is_object()) throw ConfigError("config must be a JSON object");
    std::vector<std::string> unknown;
    for (const auto& [k, v] : in.items()) {
      if (!c.j_.contains(k)) unknown.push_back(k);
      else c.j_[k] = v;
    }
    if (!unknown.empty()) {
      std::string msg = "unknown config keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
    return c;
  }

  static ScenarioConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  const nlohmann::json& json() const { return j_; }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config '" + path + "'");
    out << j_.dump(2) << '\n';
  }

  /// Sets a key from command-line text, converting by the schema type.
  void set_text(const std::string& key, const std::string& text) {
    const ConfigField& f = field(key);
    using T = ConfigField::Type;
    try {
      switch (f.type) {
        case T::text:
        case T::rational: j_[key] = text; break;
        case T::real: j_[key] = std::stod(text); break;
        case T::integer: j_[key] = std::stoull(text); break;
        case T::boolean:
          if (text == "true" || text == "1") j_[key] = true;
          else if (text == "false" || text == "0") j_[key] = false;
          else throw std::invalid_argument(text);
          break;
        case T::vector: j_[key] = detail::parse_vector(text); break;
        case T::matrix: {
          nlohmann::json rows = nlohmann::json::array();
          std::stringstream ss(text);
          std::string row;
          while (std::getline(ss, row, ';')) rows.push_back(detail::parse_vector(row));
          j_[key] = rows;
          break;
        }
      }
    } catch (const std::logic_error&) {
      throw ConfigError("--" + key + ": cannot read '" + text + "'");
    }
  }

  /// Every problem with the configuration, not just the first.
  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    using T = ConfigField::Type;
    for (const auto& f : config_schema()) {
      const auto& v = j_.at(f.key);
      if (v.is_null()) continue;
      bool ok = true;
      switch (f.type) {
        case T::text: ok = v.is_string(); break;
        case T::rational:
          ok = v.is_string() || v.is_number();
          if (ok) {
            try {
              rational(f.key);
            } catch (const Error&) {
              ok = false;
            }
          }
          break;
        case T::real: ok = v.is_number(); break;
        case T::integer: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); break;
        case T::boolean: ok = v.is_boolean(); break;
        case T::vector: ok = v.is_array() && std::all_of(v.begin(), v.end(), [](auto& x) { return x.is_number(); }); break;
        case T::matrix: ok = v.is_array(); break;
      }
      if (!ok) errs.push_back(f.key + ": expected " + type_name(f.type) + ", got " + v.dump());
    }
    if (!errs.empty()) return errs;
    auto check = [&](const std::function<void()>& fn) {
      try {
        fn();
      } catch (const Error& e) {
        errs.push_back(e.what());
      }
    };
    check([&] { op(); });
    check([&] { domain(); });
    check([&] { pack(); });
    check([&] {
      const auto D = domain();
      if (x1().size() != D.dim()) throw ConfigError("x1 has dimension " + std::to_string(x1().size()));
      if (!D.contains(x1())) throw ConfigError("x1 is outside the domain");
    });
    check([&] {
      const auto D = domain();
      if (z().size() != D.dim()) throw ConfigError("z has dimension " + std::to_string(z().size()));
      if (!D.contains(z())) throw ConfigError("z is outside the domain");
    });
    check([&] {
      if (!(rational("eps") > 0)) throw ConfigError("eps must be positive");
    });
    check([&] { g(); });
    check([&] { parse_predicate_kind(text("predicate")); });
    check([&] {
      const auto fn = text("functional");
      if (fn != "phi" && fn != "phi_prime" && fn != "phi_double_prime" && fn != "delta" && fn != "psi") {
        throw ConfigError("functional must be phi|phi_prime|phi_double_prime|delta|psi");
      }
    });
    check([&] {
      const auto pol = text("d_const_policy");
      if (pol != "M" && pol != "max_M_drate") throw ConfigError("d_const_policy must be M|max_M_drate");
    });
    check([&] {
      if (integer("steps") < 1) throw ConfigError("steps must be >= 1");
    });
    check([&] {
      if (!(real("tol") > 0)) throw ConfigError("tol must be positive");
    });
    check([&] {
      if (!j_["digit_cap"].is_null() && integer("digit_cap") < 10) throw ConfigError("digit_cap must be >= 10");
    });
    return errs;
  }

  void validate_or_throw() const {
    const auto errs = validate();
    if (errs.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }

  // Typed accessors -------------------------------------------------------

  std::string text(const std::string& k) const { return j_.at(k).get<std::string>(); }
  double real(const std::string& k) const { return j_.at(k).get<double>(); }
  std::uint64_t integer(const std::string& k) const { return j_.at(k).get<std::uint64_t>(); }
  bool flag(const std::string& k) const { return j_.at(k).get<bool>(); }
  bool has(const std::string& k) const { return !j_.at(k).is_null(); }
  Rational rational(const std::string& k) const {
    const auto& v = j_.at(k);
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    return to_rational(Real(v.get<double>()));
  }
  Point vec(const std::string& k) const { return detail::to_point(j_.at(k).get<std::vector<double>>()); }

  OperatorSpec op() const {
    const auto k = text("op");
    if (k == "identity") return OperatorSpec::identity();
    if (k == "cubic_decay") return OperatorSpec::cubic_decay();
    if (k == "rotation") return OperatorSpec::rotation(real("angle"));
    if (k == "scaling") return OperatorSpec::scaling(real("scale"));
    if (k == "affine") {
      if (!has("matrix") || !has("offset")) throw ConfigError("affine operator needs matrix and offset");
      const auto rows = j_.at("matrix").get<std::vector<std::vector<double>>>();
      Matrix A(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw ConfigError("matrix rows differ in length");
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
      }
      return OperatorSpec::affine(A, vec("offset"));
    }
    throw ConfigError("unknown operator '" + k + "'");
  }

  DomainSpec domain() const {
    const int dim = static_cast<int>(integer("dim"));
    if (dim < 1) throw ConfigError("dim must be >= 1");
    const Point c = has("center") ? vec("center") : Point(Point::Zero(dim));
    if (c.size() != dim) throw ConfigError("center has the wrong dimension");
    std::optional<double> m;
    if (has("M")) m = real("M");
    const auto k = text("domain");
    if (k == "box") return DomainSpec::box(c, real("radius"), m);
    if (k == "ball") return DomainSpec::ball(c, real("radius"), m);
    throw ConfigError("unknown domain '" + k + "'");
  }

  ModuliPack pack() const {
    const auto fam = text("family");
    if (fam == "ex1") return ex1_pack(rational("p"), rational("q"));
    if (fam == "ex2") return ex2_pack(flag("clamp_theta"));
    if (fam == "ex2-truncated") {
      ModuliPack p = ex2_pack(true);
      p.family = "ex2-truncated";
      return p;
    }
    if (fam == "synthetic") {
      return synthetic_pack(Nat(integer("f_mul")), Nat(integer("f_add")), Nat(integer("phi")),
                            Nat(integer("n0")), rational("delta"));
    }
    throw ConfigError("unknown family '" + fam + "'");
  }

  Point x1() const { return vec("x1"); }
  Point z() const { return vec("z"); }
  CounterfunctionExpr g() const { return parse_counterfunction(text("g")); }

  RateOptions rate_options() const {
    RateOptions r;
    if (has("d_const")) r.d_const = rational("d_const");
    r.d_const_from_drate = text("d_const_policy") == "max_M_drate";
    return r;
  }

  Rational bound_M() const {
    if (has("bound_M")) return rational("bound_M");
    const Rational m = to_rational(Real(domain().M));
    return m < 1 ? Rational(1) : m;
  }

  std::function<Rational(const Rational&)> omega() const {
    if (has("lipschitz")) return lipschitz_omega(rational("lipschitz"));
    Rational L = to_rational(Real(lipschitz_for(op(), domain())));
    return lipschitz_omega(L < 1 ? Rational(1) : L);
  }

  std::optional<std::size_t> digit_cap() const {
    if (!has("digit_cap")) return std::nullopt;
    return static_cast<std::size_t>(integer("digit_cap"));
  }

  Scenario scenario() const {
    Scenario s;
    s.op = op();
    s.domain = domain();
    s.pack = pack();
    s.x1 = x1();
    s.z = z();
    s.preds = {parse_predicate_kind(text("predicate")), rational("eps")};
    s.g_expr = text("g");
    s.name = s.op.name() + "/" + s.pack.family + "/" + s.g_expr;
    s.witness.search_limit = integer("search_limit");
    s.witness.index_cap = integer("index_cap");
    s.witness.path.tol = real("tol");
    s.rates = rate_options();
    s.audit.n_max = integer("nmax");
    s.audit.term_budget = integer("budget");
    s.seed = integer("seed");
    return s;
  }

 private:
  static const ConfigField& field(const std::string& key) {
    for (const auto& f : config_schema()) {
      if (f.key == key) return f;
    }
    throw ConfigError("unknown config key '" + key + "'");
  }

  static std::string type_name(ConfigField::Type t) {
    switch (t) {
      case ConfigField::Type::text: return "a string";
      case ConfigField::Type::rational: return "a rational";
      case ConfigField::Type::real: return "a number";
      case ConfigField::Type::integer: return "a nonnegative integer";
      case ConfigField::Type::boolean: return "a boolean";
      case ConfigField::Type::vector: return "an array of numbers";
      case ConfigField::Type::matrix: return "an array of rows";
    }
    return "?";
  }

  nlohmann::json j_ = nlohmann::json::object();
};

}  // namespace bruck
