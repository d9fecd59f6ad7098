// bruck_cli: moduli, iterate, path, bound, verify, plotdata.
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include "bruck/bruck.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

using namespace bruck;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFail = 1;
constexpr int kConfigError = 2;

/// Config file, overrides and output shared by every subcommand.
struct Common {
  std::string config;
  std::string save;
  std::string out;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "flat JSON scenario config");
  app->add_option("--save-config", c.save, "write the merged config here");
  app->add_option("--out,-o", c.out, "output file (stdout when unset)");
  for (const auto& f : config_schema()) {
    std::string flag = f.key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    std::transform(flag.begin(), flag.end(), flag.begin(), [](unsigned char ch) { return std::tolower(ch); });
    c.values[f.key];
    c.options[f.key] = app->add_option("--" + flag, c.values[f.key], f.help);
  }
}

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? ScenarioConfig() : ScenarioConfig::load(c.config);
  std::vector<std::string> errs;
  for (const auto& [key, opt] : c.options) {
    if (opt->count() == 0) continue;
    try {
      cfg.set_text(key, c.values.at(key));
    } catch (const ConfigError& e) {
      errs.push_back(e.what());
    }
  }
  for (auto& e : cfg.validate()) errs.push_back(std::move(e));
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  if (!c.save.empty()) cfg.save(c.save);
  return cfg;
}

/// Output stream: the --out file or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::unique_ptr<ScopedDigitCap> digit_cap_scope(const ScenarioConfig& cfg) {
  if (auto cap = cfg.digit_cap()) return std::make_unique<ScopedDigitCap>(*cap);
  return nullptr;
}

nlohmann::json moduli_table(const ModuliPack& pack, const std::vector<Rational>& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : grid) {
    rows.push_back({{"eps", to_string(e)},
                    {"phi1", to_json(pack.phi1(e))},
                    {"phi2", to_json(pack.phi2(e))},
                    {"phi3", to_json(pack.phi3(e))}});
  }
  return rows;
}

int cmd_moduli(const Common& c, bool audit, const std::string& grid_text, const std::vector<std::string>& only) {
  const ScenarioConfig cfg = resolve(c);
  auto cap = digit_cap_scope(cfg);
  const ModuliPack pack = cfg.pack();
  std::vector<Rational> grid;
  std::stringstream ss(grid_text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(parse_rational(item));
  for (const auto& e : grid) {
    if (!(e > 0)) throw ConfigError("--eps-grid entries must be positive");
  }
  nlohmann::json j{{"family", pack.family},
                   {"f", pack.f.describe()},
                   {"n0", pack.n0.str()},
                   {"delta", to_string(pack.delta)},
                   {"moduli", moduli_table(pack, grid)}};
  int code = kOk;
  if (audit) {
    AuditOptions opt;
    opt.n_max = cfg.integer("nmax");
    opt.term_budget = cfg.integer("budget");
    opt.eps_grid = grid;
    opt.only = only;
    const auto rep = audit_acceptably_paired(pack, opt);
    j["audit"] = rep.to_json();
    if (rep.any_fail()) code = kVerifyFail;
  }
  Output out(c.out);
  out.get() << j.dump(2) << '\n';
  return code;
}

int cmd_iterate(const Common& c) {
  const ScenarioConfig cfg = resolve(c);
  Output out(c.out);
  stream_bruck_csv(out.get(), cfg.op(), cfg.domain(), cfg.pack(), cfg.x1(), cfg.z(), cfg.integer("steps"));
  return kOk;
}

int cmd_path(const Common& c, std::uint64_t from, std::uint64_t to, std::uint64_t stride) {
  const ScenarioConfig cfg = resolve(c);
  if (from < 1 || to < from || stride < 1) throw ConfigError("path needs 1 <= from <= to and stride >= 1");
  const auto T = cfg.op();
  const auto D = cfg.domain();
  const auto pack = cfg.pack();
  PathOptions opt;
  opt.tol = cfg.real("tol");
  std::vector<PathPoint> pts;
  for (std::uint64_t i = from; i <= to; i += stride) pts.push_back(path_point(T, D, pack, i, cfg.z(), opt));
  Output out(c.out);
  write_path_csv(out.get(), pts);
  return kOk;
}

int cmd_bound(const Common& c) {
  const ScenarioConfig cfg = resolve(c);
  auto cap = digit_cap_scope(cfg);
  const auto pack = cfg.pack();
  const auto gexpr = cfg.g();
  const auto g = gexpr.build();
  const Rational eps = cfg.rational("eps");
  const Rational M = cfg.bound_M();
  const auto opt = cfg.rate_options();
  const auto fn = cfg.text("functional");
  nlohmann::json j;
  if (fn == "psi") {
    const Rational D = opt.d_const ? *opt.d_const : M;
    j = {{"functional", "psi"}, {"D", to_string(D)}, {"bound", to_json(psi_default(eps, g, D, opt.iterate))}};
  } else {
    RateResult r;
    if (fn == "phi") r = phi_full(eps, g, pack, M, opt);
    else if (fn == "phi_prime") r = phi_prime_full(eps, g, pack, M, opt);
    else if (fn == "phi_double_prime") r = phi_double_prime_full(eps, g, pack, M, opt);
    else r = delta_bound_full(eps, g, pack, M, cfg.omega(), opt);
    j = r.to_json();
  }
  j["family"] = pack.family;
  j["eps"] = to_string(eps);
  j["M"] = to_string(M);
  j["g"] = gexpr.to_string();
  Output out(c.out);
  out.get() << j.dump(2) << '\n';
  return kOk;
}

int cmd_verify(const Common& c, bool suite, bool inject, bool no_bounds, bool no_audits) {
  const ScenarioConfig cfg = resolve(c);
  auto cap = digit_cap_scope(cfg);
  std::vector<Scenario> scenarios;
  if (suite) {
    SuiteOptions opt;
    opt.eps = cfg.rational("eps");
    opt.kind = parse_predicate_kind(cfg.text("predicate"));
    opt.search_limit = cfg.integer("search_limit");
    opt.ex2_index_cap = cfg.integer("index_cap");
    opt.inject_failure = inject;
    opt.compute_bounds = !no_bounds;
    opt.run_audits = !no_audits;
    scenarios = default_suite(opt);
  } else {
    Scenario s = cfg.scenario();
    s.compute_bound = !no_bounds;
    s.run_audits = !no_audits;
    scenarios.push_back(std::move(s));
    if (inject) {
      Scenario bad = scenarios.front();
      bad.op = OperatorSpec::scaling(2.0);
      bad.name = "scaling(2)/" + bad.pack.family + "/" + bad.g_expr;
      scenarios.push_back(std::move(bad));
    }
  }
  const auto reps = run_suite(scenarios);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reps) arr.push_back(r.to_json());
  Output out(c.out);
  out.get() << arr.dump(2) << '\n';
  for (const auto& r : reps) {
    std::cerr << r.status << "  " << r.scenario["name"].get<std::string>() << "  witness="
              << (r.result.witness ? std::to_string(*r.result.witness) : "none") << "  "
              << r.comparison.status << '\n';
  }
  return any_failed(reps) ? kVerifyFail : kOk;
}

int cmd_plotdata(const Common& c, std::uint64_t stride) {
  const ScenarioConfig cfg = resolve(c);
  const auto T = cfg.op();
  const auto D = cfg.domain();
  const auto pack = cfg.pack();
  const std::uint64_t steps = cfg.integer("steps");
  if (stride == 0) stride = std::max<std::uint64_t>(1, steps / 1000);
  const Trajectory traj = run_bruck(T, D, pack, cfg.x1(), cfg.z(), steps);
  PathOptions opt;
  opt.tol = cfg.real("tol");
  Output out(c.out);
  auto& os = out.get();
  os << "n,series,value\n";
  for (std::uint64_t n = 1; n <= traj.last(); n += stride) {
    const Point x = traj.x(n);
    os << n << ",x_Tx," << detail::fmt17((x - T.eval(x)).norm()) << '\n';
    const auto y = path_point(T, D, pack, n, cfg.z(), opt);
    os << n << ",x_y," << detail::fmt17(distance(x, y.y)) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bruck iteration, rate bounds and metastability checks"};
  app.require_subcommand(1);

  Common moduli_c, iterate_c, path_c, bound_c, verify_c, plot_c;

  auto* moduli = app.add_subcommand("moduli", "evaluate and audit a moduli pack");
  add_common(moduli, moduli_c);
  bool audit = false;
  std::string grid = "1,1/10";
  std::vector<std::string> only;
  moduli->add_flag("--audit", audit, "run the acceptable-pairing audit");
  moduli->add_option("--eps-grid", grid, "comma-separated epsilons");
  moduli->add_option("--only", only, "audit only these conditions");

  auto* iterate = app.add_subcommand("iterate", "emit a trajectory CSV");
  add_common(iterate, iterate_c);

  auto* path = app.add_subcommand("path", "emit path points y_i as CSV");
  add_common(path, path_c);
  std::uint64_t from = 1, to = 100, stride = 1;
  path->add_option("--from", from, "first index");
  path->add_option("--to", to, "last index");
  path->add_option("--stride", stride, "index stride");

  auto* bound = app.add_subcommand("bound", "emit a rate bound as JSON");
  add_common(bound, bound_c);

  auto* verify = app.add_subcommand("verify", "witness search and bound comparison");
  add_common(verify, verify_c);
  bool suite = false, inject = false, no_bounds = false, no_audits = false;
  verify->add_flag("--suite", suite, "run the 18-scenario suite");
  verify->add_flag("--inject-failure", inject, "add a misconfigured x -> 2x scenario");
  verify->add_flag("--no-bounds", no_bounds, "skip the rate bounds");
  verify->add_flag("--no-audits", no_audits, "skip the audits");

  auto* plot = app.add_subcommand("plotdata", "long-format CSV of |x_n - T x_n| and |x_n - y_n|");
  add_common(plot, plot_c);
  std::uint64_t plot_stride = 0;
  plot->add_option("--stride", plot_stride, "index stride (steps/1000 when unset)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*moduli) return cmd_moduli(moduli_c, audit, grid, only);
    if (*iterate) return cmd_iterate(iterate_c);
    if (*path) return cmd_path(path_c, from, to, stride);
    if (*bound) return cmd_bound(bound_c);
    if (*verify) return cmd_verify(verify_c, suite, inject, no_bounds, no_audits);
    if (*plot) return cmd_plotdata(plot_c, plot_stride);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kVerifyFail;
  }
  return kOk;
}
