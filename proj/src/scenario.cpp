#include "territory/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "territory/continuation.hpp"
#include "territory/equilibria.hpp"
#include "territory/error.hpp"
#include "territory/evolve.hpp"
#include "territory/packs.hpp"
#include "territory/segregation.hpp"

namespace territory {

using io::json;
namespace fs = std::filesystem;

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"evolve",   "equilibria", "bifurcate", "continue",
                                                 "segregate", "packs",      "optimize"};
  return names;
}

namespace {

double parse_number(const std::string& text, const std::string& field) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("cannot parse extent '" + text + "'", field);
}

// Reads scenario options, rejecting keys nobody asked for.
class Options {
 public:
  Options(const json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
    if (!j_.is_object()) throw ConfigError("options must be a JSON object", "options");
  }

  double number(const std::string& key, double fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_number()) throw ConfigError(key + " must be a number", "options." + key);
    return j_.at(key).get<double>();
  }

  int integer(const std::string& key, int fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_number_integer()) throw ConfigError(key + " must be an integer", "options." + key);
    return j_.at(key).get<int>();
  }

  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(key + " must be a boolean", "options." + key);
    return j_.at(key).get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& a = j_.at(key);
    if (a.is_number()) return {a.get<double>()};
    if (!a.is_array()) throw ConfigError(key + " must be an array of numbers", "options." + key);
    std::vector<double> out;
    for (const auto& x : a) {
      if (!x.is_number()) throw ConfigError(key + " must be an array of numbers", "options." + key);
      out.push_back(x.get<double>());
    }
    return out;
  }

  json raw(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key) : json();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError("unknown option '" + key + "' for scenario " + scope_, "options." + key);
  }

 private:
  const json& j_;
  std::string scope_;
  std::set<std::string> used_;
};

void positive(double v, const std::string& field) {
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(field + " must be positive", "options." + field);
}

Spectrum spectrum_for(const ScenarioConfig& c) {
  return neumann_spectrum(c.grid, std::min(c.spectrum_modes, c.grid.size()), c.spectrum_source);
}

// Enough modes to pass `ceiling`, doubling the request up to the node count.
Spectrum spectrum_past(const ScenarioConfig& c, double ceiling) {
  int m = std::min(c.spectrum_modes, c.grid.size());
  Spectrum s = neumann_spectrum(c.grid, m, c.spectrum_source);
  while (s.eigenvalues.back() < ceiling && m < c.grid.size()) {
    m = std::min(2 * m, c.grid.size());
    s = neumann_spectrum(c.grid, m, c.spectrum_source);
  }
  return s;
}

struct Writer {
  fs::path root;
  std::vector<std::string> artifacts;

  void json_file(const std::string& name, const json& j) {
    io::write_json(root / name, j);
    artifacts.push_back(name);
  }
  void table(const std::string& name, const io::Table& t) {
    io::write_table(root / name, t);
    artifacts.push_back(name);
  }
};

SystemState initial_state(const ScenarioConfig& c, const json& spec) {
  const ModelParams& p = c.params;
  const int comps = p.n_components();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const json init = spec.is_null() ? json{{"type", "catalog"}, {"kind", "PREY_ONLY"}, {"perturbation", 1e-3}} : spec;
  if (!init.is_object() || !init.contains("type") || !init.at("type").is_string())
    throw ConfigError("initial needs a string 'type'", "options.initial");
  const std::string type = init.at("type").get<std::string>();
  Options o(init, "initial");
  o.raw("type");
  auto values_of = [&](const std::string& key) {
    std::vector<double> v = o.numbers(key, {});
    if (static_cast<int>(v.size()) != comps)
      throw ConfigError(key + " needs one value per component (predators then prey)", "options.initial." + key);
    return v;
  };
  SystemState s;
  if (type == "catalog") {
    const std::string kind = o.raw("kind").is_string() ? o.raw("kind").get<std::string>() : "PREY_ONLY";
    const double pert = o.number("perturbation", 0.0);
    o.finish();
    const ConstantSolution* found = nullptr;
    const auto catalog = constant_catalog(p);
    for (const auto& sol : catalog)
      if (sol.label() == kind) found = &sol;
    if (!found) throw ConfigError("catalog has no member '" + kind + "'", "options.initial.kind");
    s = SystemState::constant(c.grid, found->point);
    for (auto& f : s.fields)
      for (int i = 0; i < f.size(); ++i) f[i] = std::max(0.0, f[i] + pert * unit(rng));
  } else if (type == "constant") {
    const std::vector<double> v = values_of("values");
    o.finish();
    Eigen::VectorXd packed = Eigen::Map<const Eigen::VectorXd>(v.data(), comps);
    s = SystemState::constant(c.grid, StatePoint::unpack(packed));
  } else if (type == "random") {
    const double low = o.number("low", 0.0);
    const double high = o.number("high", 1.0);
    o.finish();
    if (!(low >= 0) || !(high > low)) throw ConfigError("random initial data needs 0 <= low < high", "options.initial");
    std::uniform_real_distribution<double> dist(low, high);
    s = SystemState::constant(c.grid, StatePoint::unpack(Eigen::VectorXd::Zero(comps)));
    for (auto& f : s.fields)
      for (int i = 0; i < f.size(); ++i) f[i] = dist(rng);
  } else if (type == "cosine") {
    const std::vector<double> v = values_of("values");
    const double amp = o.number("amplitude", 0.1);
    const int mode = o.integer("mode", 1);
    o.finish();
    if (std::abs(amp) > 1) throw ConfigError("cosine amplitude must be within [-1, 1]", "options.initial.amplitude");
    s = SystemState::constant(c.grid, StatePoint::unpack(Eigen::VectorXd::Zero(comps)));
    for (int comp = 0; comp < comps; ++comp) {
      const double sign = comp % 2 == 0 ? 1.0 : -1.0;
      for (int i = 0; i < c.grid.size(); ++i) {
        const double x = (c.grid.coord(i, 0) - c.grid.lo[0]) / c.grid.length(0);
        s.fields[comp][i] = v[comp] * (1.0 + sign * amp * std::cos(mode * std::numbers::pi * x));
      }
    }
  } else {
    throw ConfigError("initial type must be catalog, constant, random or cosine", "options.initial.type");
  }
  return s;
}

json run_evolve(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "evolve");
  RunOptions ro;
  ro.t_end = o.number("t_end", 10.0);
  ro.sample_every = o.number("sample_every", 0.1);
  ro.dt0 = o.number("dt0", 0.0);
  ro.dt_max = o.number("dt_max", ro.dt_max);
  ro.steady_tol = o.number("steady_tol", 0.0);
  ro.snapshot_every = o.integer("snapshot_every", 0);
  ro.monitors.epsilon = o.number("epsilon", ro.monitors.epsilon);
  ro.monitors.transient = o.number("transient", -1.0);
  ro.monitors.hold_samples = o.integer("hold_samples", ro.monitors.hold_samples);
  const double sigma_prime_opt = o.number("sigma_prime", std::numeric_limits<double>::quiet_NaN());
  const bool with_ode = o.flag("ode", false);
  const json init = o.raw("initial");
  o.finish();
  positive(ro.t_end, "t_end");
  positive(ro.sample_every, "sample_every");
  positive(ro.dt_max, "dt_max");

  const SystemState s0 = initial_state(c, init);
  EvolveReport rep = run(c.params, s0, ro);
  json extra = json::object();
  try {
    const SigmaCriterion sc = sigma_criterion(c.params, spectrum_for(c));
    rep.sigma = sc.sigma;
    extra["sigma_criterion"] = {{"sigma", sc.sigma}, {"d", sc.d}, {"gamma1", sc.gamma1}, {"lipschitz", sc.lipschitz}};
  } catch (const ParamError& e) {
    extra["sigma_criterion"] = {{"unavailable", e.what()}};
  }
  rep.sigma_prime = std::isfinite(sigma_prime_opt) ? sigma_prime_opt
                    : (std::isfinite(rep.sigma) && rep.sigma > 0 ? 0.5 * rep.sigma : std::numeric_limits<double>::quiet_NaN());
  if (std::isfinite(rep.sigma_prime)) {
    try {
      const HomogenizationVerdict v = homogenization_check(rep, rep.sigma_prime);
      extra["homogenization"] = {{"pass", v.pass}, {"fitted_rate", std::isfinite(v.fitted_rate) ? json(v.fitted_rate) : json(nullptr)},
                                 {"threshold", v.threshold}};
    } catch (const FitError& e) {
      extra["homogenization"] = {{"unavailable", e.what()}};
    }
  }
  w.table("trajectory.csv", io::trajectory_table(rep.samples));
  w.table("final_state.csv", io::state_table(rep.final_state));
  for (size_t k = 0; k < rep.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshots/state_" << std::setw(5) << std::setfill('0') << k << ".csv";
    w.table(name.str(), io::state_table(rep.snapshots[k]));
  }
  if (with_ode) {
    Eigen::VectorXd means(c.params.n_components());
    for (int comp = 0; comp < means.size(); ++comp) means[comp] = integrate(s0.grid, s0.fields[comp]) / s0.grid.measure();
    const auto ode = ode_trajectory(c.params, means, rep.final_state.t, 1e-3, ro.sample_every);
    io::Table t;
    t.header.push_back("t");
    for (int comp = 0; comp + 1 < means.size(); ++comp) t.header.push_back("w" + std::to_string(comp + 1));
    t.header.push_back("u");
    for (const auto& smp : ode) {
      std::vector<double> row{smp.t};
      for (int comp = 0; comp < smp.state.size(); ++comp) row.push_back(smp.state[comp]);
      t.rows.push_back(std::move(row));
    }
    w.table("ode.csv", t);
    double gap = 0.0;
    for (int comp = 0; comp < means.size(); ++comp)
      gap = std::max(gap, std::abs(integrate(rep.final_state.grid, rep.final_state.fields[comp]) /
                                       rep.final_state.grid.measure() -
                                   ode.back().state[comp]));
    extra["ode_mean_gap"] = gap;
  }
  json report = io::to_json(rep);
  report.update(extra);
  w.json_file("evolve.json", report);
  return report;
}

json run_equilibria(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "equilibria");
  o.finish();
  const Spectrum spectrum = spectrum_for(c);
  const auto catalog = constant_catalog(c.params);
  json out{{"catalog", io::catalog_to_json(c.params, catalog, &spectrum)}};
  json thresholds = json::array();
  if (c.params.n_predators >= 2)
    for (int i = 0; i < c.params.n_predators; ++i) {
      try {
        for (const auto& t : simple_stability_threshold(c.params, i))
          thresholds.push_back({{"resident", i + 1}, {"invader", t.invader + 1}, {"beta", t.beta}});
      } catch (const ParamError&) {
      }
    }
  out["simple_thresholds"] = thresholds;
  w.json_file("catalog.json", out);
  return out;
}

json run_bifurcate(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "bifurcate");
  o.finish();
  const Spectrum spectrum = spectrum_for(c);
  json pts = json::array();
  for (const auto& bp : bifurcation_points(c.params, spectrum)) pts.push_back(io::to_json(bp));
  json out{{"bifurcation_points", pts}, {"spectrum", io::to_json(spectrum)}};
  if (c.params.mu > 0) out["hypotheses"] = io::to_json(check_hypotheses(c.params, spectrum));
  w.json_file("bifurcation.json", out);
  return out;
}

struct BranchRequest {
  ContinuationConfig config;
  double eps_rel = 1e-2;
  double delta = 1e-2;
  int direction = 1;
  bool snapshots = true;
};

BranchRequest branch_request(Options& o) {
  BranchRequest r;
  r.config.beta_max = o.number("beta_max", r.config.beta_max);
  r.config.max_steps = o.integer("max_steps", r.config.max_steps);
  r.config.max_log_beta_step = o.number("max_log_beta_step", r.config.max_log_beta_step);
  r.config.tol = o.number("tol", r.config.tol);
  r.config.reconnect_tol = o.number("reconnect_tol", r.config.reconnect_tol);
  r.config.landmarks = o.numbers("landmarks", {});
  r.config.compute_stability = o.flag("stability", false);
  r.eps_rel = o.number("eps_rel", r.eps_rel);
  r.delta = o.number("delta", r.delta);
  r.direction = o.integer("direction", 1);
  r.snapshots = o.flag("snapshots", true);
  positive(r.config.beta_max, "beta_max");
  positive(r.config.tol, "tol");
  positive(r.eps_rel, "eps_rel");
  if (r.direction != 1 && r.direction != -1) throw ConfigError("direction must be 1 or -1", "options.direction");
  return r;
}

Branch compute_branch(const ScenarioConfig& c, const Spectrum& spectrum, int mode, const BranchRequest& r) {
  for (const auto& bp : bifurcation_points(c.params, spectrum)) {
    if (bp.n != mode) continue;
    if (!bp.odd) throw ConfigError("mode " + std::to_string(mode) + " has even multiplicity; not switched", "options.modes");
    const double w = coexist_point(c.params.with_beta(bp.beta_n)).w[0];
    const BranchStart start =
        start_branch(c.params, c.grid, spectrum.eigenfunctions.at(bp.n), bp, r.eps_rel * w, r.delta, r.config);
    return continue_branch(start, r.direction, r.config);
  }
  throw ConfigError("no bifurcation point with mode index " + std::to_string(mode), "options.modes");
}

json write_branch(const Branch& b, const std::string& stem, bool snapshots, Writer& w) {
  json manifest = io::branch_manifest(b);
  w.table(stem + ".csv", io::branch_table(b));
  if (snapshots)
    for (size_t k = 0; k < b.points.size(); ++k) {
      std::ostringstream name;
      name << stem << "/point_" << std::setw(5) << std::setfill('0') << k << ".csv";
      w.table(name.str(), io::state_table(b.points[k].state));
      manifest["points"][k]["snapshot"] = name.str();
    }
  w.json_file(stem + ".json", manifest);
  return manifest;
}

json run_continue(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "continue");
  const std::vector<double> modes = o.numbers("modes", {1});
  const BranchRequest r = branch_request(o);
  o.finish();
  const Spectrum spectrum = spectrum_for(c);
  json out = json::array();
  for (double m : modes) {
    const int mode = static_cast<int>(m);
    const Branch b = compute_branch(c, spectrum, mode, r);
    const json man = write_branch(b, "branch_n" + std::to_string(mode), r.snapshots, w);
    out.push_back({{"mode", mode}, {"termination", man["termination"]}, {"points", b.points.size()}});
  }
  return out;
}

json run_segregate(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "segregate");
  const int mode = o.integer("mode", 1);
  const double threshold = o.number("free_boundary_threshold", 1e-3);
  BranchRequest r = branch_request(o);
  o.finish();
  const Spectrum spectrum = spectrum_for(c);
  const Branch b = compute_branch(c, spectrum, mode, r);
  write_branch(b, "branch_n" + std::to_string(mode), r.snapshots, w);
  const SegregationReport rep = beta_sweep(b, threshold);
  json out = io::to_json(rep);
  const Comparability cm = comparability(rep);
  out["comparability"] = {{"m", cm.m}, {"beta_at_max", cm.beta_at_max}};
  const LipschitzProfile lp = lipschitz_profile(rep);
  out["lipschitz"] = {{"tail_slope", lp.tail_slope}, {"bounded", lp.bounded}, {"variation", lp.variation}};
  w.json_file("segregation.json", out);
  w.table("interfaces.csv", io::interface_table(rep));
  return {{"verdict", out["verdict"]}, {"comparability", out["comparability"]}};
}

double gamma_bar_of(const ModelParams& p) {
  double g = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.n_predators; ++i) g = std::max(g, (p.lambda * p.kpred[i] - p.mu * p.omega[i]) / (p.d[i] * p.mu));
  return g;
}

json run_packs(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "packs");
  o.finish();
  if (!(c.params.mu > 0)) throw ParamError("gamma_bar undefined for mu = 0", "mu");
  const Spectrum spectrum = spectrum_past(c, gamma_bar_of(c.params));
  const PackBoundReport rep = pack_bound(c.params, spectrum, c.grid);
  json out = io::to_json(rep);
  out["spectrum_modes"] = spectrum.size();
  w.json_file("pack_bound.json", out);
  return out;
}

json run_optimize(const ScenarioConfig& c, Writer& w) {
  Options o(c.options, "optimize");
  const int n_max = o.integer("n_max", 2);
  const std::vector<double> betas = o.numbers("beta_grid", {10.0, 100.0, 1000.0});
  OptimOptions opt;
  opt.t_end = o.number("t_end", opt.t_end);
  opt.dt_max = o.number("dt_max", opt.dt_max);
  opt.steady_tol = o.number("steady_tol", opt.steady_tol);
  opt.polish_every = o.number("polish_every", opt.polish_every);
  opt.zero_threshold = o.number("zero_threshold", opt.zero_threshold);
  opt.evolve_beta_cap = o.number("evolve_beta_cap", opt.evolve_beta_cap);
  opt.threads = o.integer("threads", 0);
  o.finish();
  positive(opt.t_end, "t_end");
  positive(opt.polish_every, "polish_every");
  const OptimReport rep = optimize_packs(c.params, c.grid, n_max, betas, opt);
  json out = io::to_json(rep);
  if (c.params.mu > 0) {
    try {
      out["pack_bound"] = io::to_json(pack_bound(c.params, spectrum_past(c, gamma_bar_of(c.params)), c.grid));
    } catch (const Error& e) {
      out["pack_bound"] = {{"unavailable", e.what()}};
    }
  }
  w.json_file("optim.json", out);
  w.table("population.csv", io::population_table(rep));
  if (rep.best >= 0) w.table("best_state.csv", io::state_table(rep.candidates[rep.best].state));
  return out.contains("best_summary") ? out["best_summary"] : json(nullptr);
}

}  // namespace

double parse_extent(const json& value, const std::string& field) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw ConfigError("extent must be a number or a string such as \"pi\"", field);
  std::string t;
  for (char ch : value.get<std::string>())
    if (!std::isspace(static_cast<unsigned char>(ch))) t += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const size_t pos = t.find("pi");
  if (pos == std::string::npos) return parse_number(t, field);
  std::string before = t.substr(0, pos);
  std::string after = t.substr(pos + 2);
  double factor = 1.0;
  if (!before.empty()) {
    if (before.back() == '*') before.pop_back();
    if (before == "-")
      factor = -1.0;
    else if (!before.empty())
      factor = parse_number(before, field);
  }
  if (!after.empty()) {
    if (after[0] != '/') throw ConfigError("cannot parse extent '" + t + "'", field);
    const double den = parse_number(after.substr(1), field);
    if (den == 0) throw ConfigError("extent divides by zero", field);
    factor /= den;
  }
  return factor * std::numbers::pi;
}

void apply_override(json& doc, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'", "set");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  for (size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].empty()) throw ConfigError("empty segment in --set path '" + path + "'", "set");
    json& cur = *node;
    if (cur.is_array()) {
      size_t idx = 0;
      try {
        idx = std::stoul(keys[i]);
      } catch (const std::exception&) {
        throw ConfigError("array index expected in --set path '" + path + "'", "set");
      }
      if (idx >= cur.size()) throw ConfigError("index out of range in --set path '" + path + "'", "set");
      node = &cur[idx];
    } else {
      if (cur.is_null()) cur = json::object();
      if (!cur.is_object()) throw ConfigError("--set path '" + path + "' descends into a scalar", "set");
      node = &cur[keys[i]];
    }
  }
  *node = value;
}

ScenarioConfig load_config(const json& doc) {
  static const std::set<std::string> keys = {"scenario", "params", "grid", "spectrum", "options", "seed"};
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", "config");
  for (const auto& [key, value] : doc.items())
    if (!keys.count(key)) throw ConfigError("unknown config key '" + key + "'", key);
  ScenarioConfig c;
  c.document = doc;
  if (!doc.contains("scenario") || !doc.at("scenario").is_string())
    throw ConfigError("config needs a string 'scenario'", "scenario");
  c.scenario = doc.at("scenario").get<std::string>();
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end())
    throw ConfigError("unknown scenario '" + c.scenario + "'", "scenario");
  if (!doc.contains("params")) throw ConfigError("config needs 'params'", "params");
  c.params = io::params_from_json(doc.at("params"));

  if (!doc.contains("grid") || !doc.at("grid").is_object()) throw ConfigError("config needs a 'grid' object", "grid");
  const json& g = doc.at("grid");
  for (const auto& [key, value] : g.items())
    if (key != "dim" && key != "extents" && key != "n_cells") throw ConfigError("unknown grid key '" + key + "'", "grid." + key);
  const int dim = g.value("dim", 1);
  if (!g.contains("extents") || !g.at("extents").is_array() || static_cast<int>(g.at("extents").size()) != dim)
    throw ConfigError("grid.extents needs one [a, b] pair per axis", "grid.extents");
  if (!g.contains("n_cells") || !g.at("n_cells").is_array() || static_cast<int>(g.at("n_cells").size()) != dim)
    throw ConfigError("grid.n_cells needs one count per axis", "grid.n_cells");
  std::vector<std::pair<double, double>> extents;
  std::vector<int> cells;
  for (int axis = 0; axis < dim; ++axis) {
    const json& e = g.at("extents")[axis];
    if (!e.is_array() || e.size() != 2) throw ConfigError("grid.extents entries must be [a, b]", "grid.extents");
    extents.emplace_back(parse_extent(e[0], "grid.extents"), parse_extent(e[1], "grid.extents"));
    if (!g.at("n_cells")[axis].is_number_integer()) throw ConfigError("grid.n_cells must be integers", "grid.n_cells");
    cells.push_back(g.at("n_cells")[axis].get<int>());
  }
  c.grid = build_grid(dim, extents, cells);

  if (doc.contains("spectrum")) {
    const json& s = doc.at("spectrum");
    if (!s.is_object()) throw ConfigError("spectrum must be an object", "spectrum");
    for (const auto& [key, value] : s.items())
      if (key != "modes" && key != "source") throw ConfigError("unknown spectrum key '" + key + "'", "spectrum." + key);
    if (s.contains("modes")) {
      if (!s.at("modes").is_number_integer() || s.at("modes").get<int>() < 2)
        throw ConfigError("spectrum.modes must be an integer >= 2", "spectrum.modes");
      c.spectrum_modes = s.at("modes").get<int>();
    }
    if (s.contains("source")) {
      const std::string src = s.at("source").is_string() ? s.at("source").get<std::string>() : "";
      if (src == "analytic")
        c.spectrum_source = SpectrumSource::Analytic;
      else if (src == "discrete")
        c.spectrum_source = SpectrumSource::Discrete;
      else
        throw ConfigError("spectrum.source must be analytic or discrete", "spectrum.source");
    }
  }
  if (doc.contains("options")) {
    if (!doc.at("options").is_object()) throw ConfigError("options must be an object", "options");
    c.options = doc.at("options");
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer", "seed");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  return c;
}

std::vector<Diagnostic> validate(const ScenarioConfig& c) {
  std::vector<Diagnostic> out;
  const ModelParams& p = c.params;
  try {
    p.validate();
  } catch (const ParamError& e) {
    out.push_back({"error", "INVALID_PARAMS", e.what(), e.field()});
    return out;
  }
  for (int i = 0; i < p.n_predators; ++i)
    if (!(p.lambda * p.kpred[i] > p.mu * p.omega[i]))
      out.push_back({"warning", "H_VIOLATED",
                     "predator " + std::to_string(i + 1) + " violates lambda*k > mu*omega and goes extinct", "omega"});
  const bool pair_scenario = c.scenario == "bifurcate" || c.scenario == "continue" || c.scenario == "segregate";
  if (p.mu == 0.0) {
    if (c.scenario == "packs") out.push_back({"error", "MU_ZERO", "gamma_bar undefined for mu = 0", "mu"});
    if (c.scenario == "evolve")
      out.push_back({"info", "MU_ZERO", "sigma criterion and asymptotic bounds unavailable for mu = 0", "mu"});
    if (pair_scenario) out.push_back({"info", "MU_ZERO", "nonresonance margin undefined for mu = 0", "mu"});
  } else {
    try {
      const Spectrum s = neumann_spectrum(c.grid, std::min(c.spectrum_modes, c.grid.size()), SpectrumSource::Analytic);
      const HypothesisReport h = check_hypotheses(p, s);
      for (int i = 0; i < p.n_predators; ++i) {
        const int n = h.nearest_mode[i];
        if (n >= 0 && h.nonresonance_margin[i] <= 1e-8 * std::max(1.0, s.eigenvalues[n])) {
          std::ostringstream msg;
          msg << "reduced rate " << h.reduced_rate[i] << " of predator " << i + 1 << " resonates with gamma_" << n
              << " = " << s.eigenvalues[n] << " (mode " << n << ")";
          out.push_back({"warning", "RESONANCE", msg.str(), "mu"});
          break;
        }
      }
    } catch (const Error& e) {
      out.push_back({"info", "SPECTRUM", e.what(), "grid"});
    }
  }
  if (pair_scenario && !(p.symmetric && p.is_symmetric_pair()))
    out.push_back({"error", "SYMMETRIC_PAIR_REQUIRED", "scenario needs two identical predators with a_12 = a_21", "params"});
  if ((c.scenario == "continue" || c.scenario == "segregate") && c.grid.dim != 1)
    out.push_back({"error", "ONE_DIMENSIONAL", "branch continuation tracks zero counts on 1D grids only", "grid.dim"});
  if (c.scenario == "optimize" && !p.identical_predators())
    out.push_back({"warning", "NOT_IDENTICAL", "optimizer uses the coefficients of predator 1 for every pack", "params"});
  if (c.scenario == "evolve" && p.mu > 0 && (p.mu_self.array() == 0).any())
    out.push_back({"info", "MU_SELF_ZERO", "predator bounds with mu_self = 0 are not monitored", "mu_self"});
  return out;
}

json to_json(const Diagnostic& d) {
  return json{{"severity", d.severity}, {"code", d.code}, {"message", d.message}, {"field", d.field}};
}

ScenarioResult run_scenario(const ScenarioConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Diagnostic> diags = validate(c);
  for (const auto& d : diags)
    if (d.severity == "error") throw ConfigError(d.message, d.field);
  fs::create_directories(out);
  Writer w{out, {}};
  json summary;
  if (c.scenario == "evolve")
    summary = run_evolve(c, w);
  else if (c.scenario == "equilibria")
    summary = run_equilibria(c, w);
  else if (c.scenario == "bifurcate")
    summary = run_bifurcate(c, w);
  else if (c.scenario == "continue")
    summary = run_continue(c, w);
  else if (c.scenario == "segregate")
    summary = run_segregate(c, w);
  else if (c.scenario == "packs")
    summary = run_packs(c, w);
  else
    summary = run_optimize(c, w);

  json diag = json::array();
  for (const auto& d : diags) diag.push_back(to_json(d));
  ScenarioResult r;
  r.artifacts = w.artifacts;
  r.manifest = json{{"scenario", c.scenario},
                    {"version", kVersion},
                    {"seed", c.seed},
                    {"inputs", c.document},
                    {"diagnostics", diag},
                    {"artifacts", r.artifacts},
                    {"status", "ok"},
                    {"wall_time", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  if (summary.is_object() && summary.size() < 16) r.manifest["summary"] = summary;
  io::write_json(out / "manifest.json", r.manifest);
  return r;
}

}  // namespace territory
