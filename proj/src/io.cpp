#include "territory/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "territory/error.hpp"

namespace territory::io {

namespace {

const std::set<std::string> kParamKeys = {"lambda", "mu",   "n_predators", "omega", "kpred",    "mu_self",
                                          "d",      "dprey", "beta",       "a",     "symmetric"};

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError("field '" + field + "' must be a number", field);
  return j.get<double>();
}

Eigen::VectorXd per_predator(const json& doc, const std::string& field, int n, std::optional<double> fallback) {
  if (!doc.contains(field)) {
    if (!fallback) throw ConfigError("missing field '" + field + "'", field);
    return Eigen::VectorXd::Constant(n, *fallback);
  }
  const json& j = doc.at(field);
  if (j.is_number()) return Eigen::VectorXd::Constant(n, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError("field '" + field + "' must be a number or an array of n_predators numbers", field);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = number(j[i], field);
  return v;
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// NaN and infinities become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

ModelParams params_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("params must be a JSON object", "params");
  for (const auto& [key, value] : j.items())
    if (!kParamKeys.count(key)) throw ConfigError("unknown params key '" + key + "'", key);
  if (!j.contains("n_predators") || !j.at("n_predators").is_number_integer())
    throw ConfigError("n_predators must be an integer", "n_predators");
  ModelParams p;
  p.n_predators = j.at("n_predators").get<int>();
  if (p.n_predators < 1) throw ParamError("n_predators must be >= 1", "n_predators");
  const int n = p.n_predators;
  if (!j.contains("lambda")) throw ConfigError("missing field 'lambda'", "lambda");
  if (!j.contains("mu")) throw ConfigError("missing field 'mu'", "mu");
  p.lambda = number(j.at("lambda"), "lambda");
  p.mu = number(j.at("mu"), "mu");
  p.omega = per_predator(j, "omega", n, std::nullopt);
  p.kpred = per_predator(j, "kpred", n, std::nullopt);
  p.mu_self = per_predator(j, "mu_self", n, 0.0);
  p.d = per_predator(j, "d", n, 1.0);
  p.dprey = j.contains("dprey") ? number(j.at("dprey"), "dprey") : 1.0;
  p.beta = j.contains("beta") ? number(j.at("beta"), "beta") : 0.0;
  p.a = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
  if (j.contains("a")) {
    const json& a = j.at("a");
    if (!a.is_array() || static_cast<int>(a.size()) != n) throw ConfigError("a must be an n×n array", "a");
    for (int r = 0; r < n; ++r) {
      if (!a[r].is_array() || static_cast<int>(a[r].size()) != n) throw ConfigError("a must be an n×n array", "a");
      for (int c = 0; c < n; ++c) p.a(r, c) = number(a[r][c], "a");
    }
  }
  if (j.contains("symmetric")) {
    if (!j.at("symmetric").is_boolean()) throw ConfigError("symmetric must be a boolean", "symmetric");
    p.symmetric = j.at("symmetric").get<bool>();
  } else {
    p.symmetric = p.a == p.a.transpose();
  }
  p.validate();
  return p;
}

json params_to_json(const ModelParams& p) {
  json a = json::array();
  for (int r = 0; r < p.a.rows(); ++r) a.push_back(vec(p.a.row(r).transpose()));
  return json{{"lambda", p.lambda}, {"mu", p.mu},         {"n_predators", p.n_predators}, {"omega", vec(p.omega)},
              {"kpred", vec(p.kpred)}, {"mu_self", vec(p.mu_self)}, {"d", vec(p.d)},  {"dprey", p.dprey},
              {"beta", p.beta},     {"a", a},            {"symmetric", p.symmetric}};
}

json to_json(const StatePoint& s) { return json{{"w", vec(s.w)}, {"u", s.u}}; }

json to_json(const Spectrum& s) {
  json out = json::array();
  const std::vector<int> mult = s.multiplicities();
  for (int i = 0; i < s.size(); ++i)
    out.push_back({{"index", i}, {"eigenvalue", s.eigenvalues[i]}, {"multiplicity", mult[i]}});
  return out;
}

json to_json(const HypothesisReport& r) {
  json out{{"h_holds", r.h_holds}, {"resonant", r.resonant}, {"warnings", r.warnings}, {"nearest_mode", r.nearest_mode}};
  out["reduced_rate"] = json::array();
  for (double x : r.reduced_rate) out["reduced_rate"].push_back(num(x));
  out["nonresonance_margin"] = json::array();
  for (double x : r.nonresonance_margin) out["nonresonance_margin"].push_back(num(x));
  return out;
}

json to_json(const BifurcationPoint& b) {
  return json{{"n", b.n}, {"gamma_n", b.gamma_n}, {"beta_n", b.beta_n}, {"multiplicity", b.multiplicity}, {"odd", b.odd}};
}

json to_json(const StabilityVerdict& v) {
  return json{{"classification", to_string(v.classification)},
              {"min_real_part", v.min_real_part},
              {"critical_mode", v.critical_mode},
              {"critical_eigenvalue", {v.critical_eigenvalue.real(), v.critical_eigenvalue.imag()}},
              {"modes_checked", v.modes_checked}};
}

json to_json(const PackBoundReport& r) {
  return json{{"gamma_bar", r.gamma_bar}, {"n_bar_exact", r.n_bar_exact},           {"n_bar_weyl", r.n_bar_weyl},
              {"unit_ball_volume", r.unit_ball_volume}, {"measure", r.measure}, {"dim", r.dim}};
}

json to_json(const SegregationReport& r) {
  json pts = json::array();
  for (size_t i = 0; i < r.betas.size(); ++i) {
    json fb{{"measure", r.free_boundaries[i].measure},
            {"cell_count", r.free_boundaries[i].nodes.size()},
            {"interfaces", r.free_boundaries[i].interfaces}};
    pts.push_back({{"beta", r.betas[i]},
                   {"overlap", r.overlaps[i]},
                   {"sup_ratio", num(r.sup_ratio[i])},
                   {"amplitude", r.amplitude[i]},
                   {"lip_estimate", r.lip_estimate[i]},
                   {"collapse_beta_w", r.collapse_beta_w[i]},
                   {"collapse_u_gap", num(r.collapse_u_gap[i])},
                   {"energy_slack", r.energy_slack[i]},
                   {"u_range_ok", static_cast<bool>(r.u_range_ok[i])},
                   {"free_boundary", fb}});
  }
  return json{{"verdict", to_string(r.verdict)},
              {"tail_overlap_ratio", num(r.tail_overlap_ratio)},
              {"tail_amplitude_ratio", num(r.tail_amplitude_ratio)},
              {"final_amplitude_ratio", num(r.final_amplitude_ratio)},
              {"points", pts}};
}

json to_json(const EvolveReport& r) {
  json viol = json::array();
  for (const auto& v : r.bound_violations)
    viol.push_back({{"t", v.t}, {"component", v.component}, {"value", v.value}, {"bound", v.bound}});
  return json{{"samples", r.samples.size()},
              {"steps", r.steps},
              {"rejections", r.rejections},
              {"steady_reached", r.steady_reached},
              {"final_time", r.final_state.t},
              {"transient_time", num(r.transient_time)},
              {"fitted_decay_rate", num(r.fitted_decay_rate)},
              {"sigma", num(r.sigma)},
              {"sigma_prime", num(r.sigma_prime)},
              {"bound_violations", viol}};
}

json branch_manifest(const Branch& b) {
  json pts = json::array();
  for (const auto& pt : b.points) {
    json e{{"beta", pt.beta}, {"amplitude", pt.amplitude}, {"zero_count", pt.zero_count}, {"residual", pt.residual}};
    if (pt.stability) e["stability"] = to_string(*pt.stability);
    pts.push_back(e);
  }
  std::string term = to_string(b.termination);
  if (b.termination == Termination::Reconnected) term += "(" + std::to_string(b.reconnected_mode) + ")";
  return json{{"origin", to_json(b.origin)}, {"termination", term}, {"points", pts}};
}

json to_json(const OptimReport& r) {
  json cands = json::array();
  for (size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    json e{{"n", c.n},
           {"beta", c.beta},
           {"population", c.population},
           {"converged", c.converged},
           {"physical", c.physical},
           {"positive_count", c.positive_count},
           {"residual", num(c.residual)},
           {"note", c.note}};
    if (i < r.identity_residuals.size())
      e["identity_residuals"] = {{"first", num(r.identity_residuals[i].first)},
                                 {"second", num(r.identity_residuals[i].second)}};
    cands.push_back(e);
  }
  json out{{"candidates", cands}, {"best", r.best >= 0 ? json(r.best) : json(nullptr)}};
  if (r.best >= 0) {
    const auto& b = r.candidates[r.best];
    out["best_summary"] = {{"n", b.n}, {"beta", b.beta}, {"population", b.population}, {"positive_count", b.positive_count}};
  }
  return out;
}

json catalog_to_json(const ModelParams& p, const std::vector<ConstantSolution>& catalog, const Spectrum* spectrum) {
  json out = json::array();
  for (const auto& sol : catalog) {
    const ModelParams q = p.with_beta(sol.beta);
    const StatePoint f = reaction(q, sol.point);
    const double residual = std::max(f.w.size() ? f.w.cwiseAbs().maxCoeff() : 0.0, std::abs(f.u));
    json e{{"kind", sol.label()}, {"point", to_json(sol.point)}, {"beta", sol.beta}, {"residual", residual},
           {"classification", nullptr}, {"min_real_part", nullptr}, {"critical_mode", nullptr}};
    if (spectrum) {
      try {
        const StabilityVerdict v = constant_stability(q, sol.point, *spectrum);
        e["classification"] = to_string(v.classification);
        e["min_real_part"] = v.min_real_part;
        e["critical_mode"] = v.critical_mode;
      } catch (const SpectrumError& err) {
        e["stability_error"] = err.what();
      }
    }
    out.push_back(e);
  }
  return out;
}

int Table::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

void write_table(const std::filesystem::path& path, const Table& t) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string(), "out");
  for (size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n' << std::setprecision(17);
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (!std::isnan(row[i])) out << row[i];
    }
    out << '\n';
  }
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string(), "path");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV " + path.string(), "path");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (cell.empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        try {
          size_t used = 0;
          row.push_back(std::stod(cell, &used));
          if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw ConfigError("non-numeric CSV cell '" + cell + "' in " + path.string(), "path");
        }
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != t.header.size()) throw ConfigError("ragged CSV row in " + path.string(), "path");
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

void coordinate_header(const Grid& grid, Table& t) {
  t.header.push_back("x");
  if (grid.dim == 2) t.header.push_back("y");
}

void coordinate_row(const Grid& grid, int node, std::vector<double>& row) {
  row.push_back(grid.coord(node, 0));
  if (grid.dim == 2) row.push_back(grid.coord(node, 1));
}

}  // namespace

Table state_table(const SystemState& s) {
  Table t;
  coordinate_header(s.grid, t);
  for (int c = 0; c + 1 < s.n_components(); ++c) t.header.push_back("w" + std::to_string(c + 1));
  t.header.push_back("u");
  for (int node = 0; node < s.grid.size(); ++node) {
    std::vector<double> row;
    coordinate_row(s.grid, node, row);
    for (const auto& f : s.fields) row.push_back(f[node]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

SystemState state_from_table(const Table& t, const Grid& grid, double time) {
  const int offset = grid.dim;
  if (static_cast<int>(t.rows.size()) != grid.size()) throw ShapeError("state table has the wrong number of rows");
  const int comps = static_cast<int>(t.header.size()) - offset;
  if (comps < 2) throw ShapeError("state table needs at least one predator and the prey");
  SystemState s;
  s.grid = grid;
  s.t = time;
  s.fields.assign(comps, Field(grid.size()));
  for (int node = 0; node < grid.size(); ++node) {
    const auto& row = t.rows[node];
    for (int axis = 0; axis < grid.dim; ++axis)
      if (std::abs(row[axis] - grid.coord(node, axis)) > 1e-9 * (1 + std::abs(row[axis])))
        throw ShapeError("state table coordinates do not match the grid");
    for (int c = 0; c < comps; ++c) s.fields[c][node] = row[offset + c];
  }
  return s;
}

Table field_table(const Grid& grid, const Field& f) {
  if (f.size() != grid.size()) throw ShapeError("field does not match the grid");
  Table t;
  coordinate_header(grid, t);
  t.header.push_back("value");
  for (int node = 0; node < grid.size(); ++node) {
    std::vector<double> row;
    coordinate_row(grid, node, row);
    row.push_back(f[node]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table trajectory_table(const std::vector<TrajectorySample>& samples) {
  Table t;
  t.header.push_back("t");
  if (samples.empty()) return t;
  const int comps = static_cast<int>(samples.front().mean.size());
  auto name = [&](int c) { return c + 1 == comps ? std::string("u") : "w" + std::to_string(c + 1); };
  for (const char* kind : {"mean_", "sup_", "grad_"})
    for (int c = 0; c < comps; ++c) t.header.push_back(kind + name(c));
  for (const auto& s : samples) {
    std::vector<double> row{s.t};
    for (const Eigen::VectorXd* v : {&s.mean, &s.sup, &s.grad_l2})
      for (int c = 0; c < comps; ++c) row.push_back((*v)[c]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table branch_table(const Branch& b) {
  Table t;
  t.header = {"beta", "amplitude", "zero_count", "residual"};
  for (const auto& pt : b.points)
    t.rows.push_back({pt.beta, pt.amplitude, static_cast<double>(pt.zero_count), pt.residual});
  return t;
}

Table interface_table(const SegregationReport& r) {
  size_t width = 0;
  for (const auto& fb : r.free_boundaries) width = std::max(width, fb.interfaces.size());
  Table t;
  t.header.push_back("beta");
  for (size_t i = 0; i < width; ++i) t.header.push_back("interface_x" + std::to_string(i + 1));
  for (size_t k = 0; k < r.betas.size(); ++k) {
    std::vector<double> row{r.betas[k]};
    for (size_t i = 0; i < width; ++i)
      row.push_back(i < r.free_boundaries[k].interfaces.size() ? r.free_boundaries[k].interfaces[i]
                                                               : std::numeric_limits<double>::quiet_NaN());
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table population_table(const OptimReport& r) {
  Table t;
  t.header = {"n", "beta", "population", "converged", "physical", "positive_count", "residual"};
  for (const auto& c : r.candidates)
    t.rows.push_back({static_cast<double>(c.n), c.beta, c.population, c.converged ? 1.0 : 0.0, c.physical ? 1.0 : 0.0,
                      static_cast<double>(c.positive_count), c.residual});
  return t;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string(), "out");
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string(), "config");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON in ") + path.string() + ": " + e.what(), "config");
  }
}

}  // namespace territory::io
