// SPDX-License-Identifier: Apache-2.0
#include "nsa/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace nsa {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::CONFIG, msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) config_error("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

double positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) config_error(std::string(what) + " must be positive");
  return v;
}

const char* method_name(PropMethod m) { return m == PropMethod::EXPM_SQUARING ? "expm" : "eigen"; }

Window parse_window(const std::string& s) {
  if (s == "HIGH") return Window::HIGH;
  if (s == "MID") return Window::MID;
  if (s == "LOW") return Window::LOW;
  if (s == "NONE") return Window::NONE;
  config_error("unknown window '" + s + "'");
}

ojson grid_json(const Grid& g) {
  ojson j;
  j["mode"] = g.mode == GridMode::RADIAL_SWAVE ? "RADIAL_SWAVE" : "BOX3D";
  j["L"] = g.L;
  j["M"] = g.n_side;
  return j;
}

ojson tol_json(const Scenario& s) {
  ojson j;
  j["tol_rank"] = s.tol_rank;
  j["tol_res"] = s.tol_res;
  return j;
}

void write_text(const fs::path& p, const std::string& text, RunResult& res) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::CONFIG, "cannot write " + p.string());
  os << text;
  res.artifacts.push_back(p.filename().string());
}

void write_json(const fs::path& p, const ojson& j, RunResult& res) { write_text(p, j.dump(2) + "\n", res); }

PotentialSpec load_potential(const Scenario& sc, GridPtr grid) {
  if (sc.potential_file.empty()) return builtin_potential(sc.potential, sc.params, grid);
  std::ifstream is(sc.potential_file);
  if (!is) config_error("cannot open potential file " + sc.potential_file);
  CVec v(grid->size());
  int k = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    if (!(ls >> re)) config_error("bad potential sample line: " + line);
    ls >> im;
    if (k >= v.size()) config_error("potential file has more samples than grid nodes");
    v(k++) = cd(re, im);
  }
  if (k != v.size()) config_error("potential file sample count does not match the grid");
  return make_potential(fs::path(sc.potential_file).stem().string(), GridFunction(grid, v));
}

CVec random_data(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec f(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double r = g.nodes.row(i).norm();
    f(i) = cd(nd(rng), nd(rng)) * std::exp(-r / 3.0) * (g.mode == GridMode::RADIAL_SWAVE ? r : 1.0);
  }
  return f;
}

struct Context {
  const Scenario& sc;
  GridPtr grid;
  PotentialSpec V;
  fs::path out;
  RunOptions opt;
  RunResult& res;
};

void fail(Context& c, const std::string& what) { c.res.failures.push_back(what); }

void run_threshold(Context& c) {
  const ThresholdReport rep = threshold_report(c.V, c.grid, c.sc.tol_rank, c.sc.tol_res);
  write_json(c.out / "threshold_report.json", threshold_report_json(rep), c.res);
  const JordanBasis b = build_threshold_basis(c.V, c.grid, c.sc.tol_rank);
  if (b.dim() > 0) {
    const BasisCertificate cert = certify(b, hamiltonian_matrix(c.V), b.dim());
    if (!(cert.chain_residual <= 1e-6)) fail(c, "threshold chain residual");
    if (!(cert.pairing_error <= 1e-6)) fail(c, "threshold pairing certificate");
  }
}

void run_inverse(Context& c) {
  const Grid& g = *c.grid;
  const JordanBasis b = build_threshold_basis(c.V, c.grid, c.sc.tol_rank);
  const RegularizedInverse reg = build_S0(c.V, c.grid, b);
  std::mt19937_64 rng(c.opt.seed);
  double worst = 0.0, equiv = 0.0;
  std::vector<CVec> data;
  for (int k = 0; k < c.sc.n_random; ++k) data.push_back(random_data(g, rng));
  // one S(lambda) and one dense factorization per lambda, shared by all data vectors
  for (double lam : c.sc.lambdas) {
    const SLambda S = build_S_lambda(reg, lam);
    const Eigen::PartialPivLU<CMat> dense(bs_matrix(c.V, lam, Branch::PLUS, {}));
    for (const CVec& f : data) {
      const FormulaResult a = inverse_via_formula(reg, S, lam, f);
      const FormulaResult a1 = inverse_via_formula(reg, S, lam, f, FormulaVariant::CORRECTION);
      const CVec d = dense.solve(f);
      worst = std::max(worst, l1_flat(g, a.out - d) / l1_flat(g, d));
      equiv = std::max(equiv, l1_flat(g, a.out - a1.out) / l1_flat(g, a.out));
    }
  }
  std::mt19937_64 rng2(c.opt.seed + 1);
  const LowEnergyScan scan = low_energy_scan(reg, c.sc.lambdas, random_data(g, rng2));
  write_text(c.out / "low_energy.csv", low_energy_csv(scan), c.res);
  ojson j;
  j["grid"] = grid_json(g);
  j["tolerances"] = tol_json(c.sc);
  j["K"] = b.K;
  j["window"] = reg.window;
  j["oracle_max_rel_error"] = worst;
  j["variant_max_rel_difference"] = equiv;
  j["s0_identity_residual"] = s0_identity_residual(reg);
  j["s0_range_residual"] = s0_range_residual(reg);
  j["generic_slope"] = scan.slope_generic;
  j["admissible_ratio"] = scan.admissible_ratio;
  j["seed"] = c.opt.seed;
  write_json(c.out / "inverse_summary.json", j, c.res);
  if (!(worst <= 1e-6)) fail(c, "formula vs dense inverse");
  if (!(equiv <= 1e-9)) fail(c, "formula variants disagree");
}

struct EvolveOutcome {
  double exponent_free = 0.0, exponent_projected = 0.0;
  bool projected = false;
};

EvolveOutcome run_evolve(Context& c) {
  const Grid& g = *c.grid;
  CVec f = gaussian_bump(c.grid, c.sc.sigma).values;
  if (c.sc.eigen_weight != 0.0) {
    if (!c.V.eigenfunction) config_error("eigen_weight needs a potential with a known zero-energy state");
    f += c.sc.eigen_weight * *c.V.eigenfunction;
  }
  const PropagatorPlan plan = make_plan(c.V, c.grid, f, 0.0, c.sc.T_max, c.sc.method, c.sc.dt);
  EvolveOutcome o;
  const DecayReport free_rep = dispersive_scan(plan, f, std::nullopt, c.sc.t_fit_min);
  o.exponent_free = free_rep.exponent;
  DecayReport rep = free_rep;
  double proj_rank = 0.0;
  if (c.sc.project) {
    const PppResult P = build_Ppp(c.V, c.grid);
    proj_rank = P.P.matrix.trace().real();
    if (!P.centers.empty()) {
      rep = dispersive_scan(plan, f, P.P, c.sc.t_fit_min);
      o.projected = true;
      write_text(c.out / "decay_unprojected.csv", decay_csv(free_rep), c.res);
    }
  }
  o.exponent_projected = rep.exponent;
  write_text(c.out / "decay.csv", decay_csv(rep), c.res);
  ojson j;
  j["grid"] = grid_json(g);
  j["tolerances"] = tol_json(c.sc);
  j["method"] = method_name(c.sc.method);
  j["T_max"] = plan.T_max;
  j["fit_window"] = {rep.fit_lo, rep.fit_hi};
  j["exponent"] = rep.exponent;
  j["exponent_stderr"] = rep.exponent_stderr;
  j["exponent_unprojected"] = free_rep.exponent;
  j["projected"] = o.projected;
  j["projection_rank"] = proj_rank;
  write_json(c.out / "evolve_summary.json", j, c.res);
  if (c.sc.expect_exponent) {
    const auto [lo, hi] = *c.sc.expect_exponent;
    if (!(rep.exponent >= lo && rep.exponent <= hi)) fail(c, "decay exponent outside expected range");
  }
  return o;
}

void run_ftscan(Context& c) {
  TransformParams p;
  p.n = c.sc.n_lambda;
  p.lambda1 = c.sc.lambda1;
  p.project = c.sc.ft_project;
  const CVec f = gaussian_bump(c.grid, c.sc.sigma).values;
  const TransformScan s = t_hat_l1_scan(c.V, c.grid, f / l1_flat(*c.grid, f), c.sc.window, p);
  write_text(c.out / "transform_scan.csv", transform_csv(s), c.res);
  write_text(c.out / "transform_summary.json", transform_summary_json(s), c.res);
  if (c.sc.window == Window::LOW && c.sc.ft_project && s.verdict != "BOUNDED") fail(c, "projected LOW-window scan diverged");
}

}  // namespace

const char* pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::THRESHOLD: return "threshold";
    case Pipeline::INVERSE: return "invert";
    case Pipeline::EVOLVE: return "evolve";
    case Pipeline::FTSCAN: return "ftscan";
    default: return "full";
  }
}

Pipeline parse_pipeline(const std::string& s) {
  if (s == "threshold") return Pipeline::THRESHOLD;
  if (s == "invert" || s == "inverse") return Pipeline::INVERSE;
  if (s == "evolve") return Pipeline::EVOLVE;
  if (s == "ftscan") return Pipeline::FTSCAN;
  if (s == "full") return Pipeline::FULL;
  config_error("unknown pipeline '" + s + "'");
}

Scenario parse_scenario(const json& j, const fs::path& base) {
  check_keys(j, {"schema", "pipeline", "grid", "potential", "tolerances", "inverse", "evolve", "ftscan"}, "scenario");
  if (!j.contains("schema") || !j["schema"].is_string() || j["schema"].get<std::string>() != kSchema)
    config_error(std::string("schema must be \"") + kSchema + "\"");
  Scenario s;
  s.pipeline = parse_pipeline(get_or<std::string>(j, "pipeline", "threshold"));
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, {"mode", "L", "M"}, "grid");
    const std::string mode = get_or<std::string>(g, "mode", "radial");
    if (mode == "radial") s.mode = GridMode::RADIAL_SWAVE;
    else if (mode == "box") s.mode = GridMode::BOX3D;
    else config_error("grid mode must be 'radial' or 'box'");
    s.L = positive(get_or<double>(g, "L", s.L), "grid.L");
    s.M = get_or<int>(g, "M", s.M);
  }
  if (j.contains("potential")) {
    const json& p = j["potential"];
    check_keys(p, {"name", "params", "file"}, "potential");
    s.potential = get_or<std::string>(p, "name", s.potential);
    if (p.contains("params")) {
      if (!p["params"].is_object()) config_error("potential.params must be an object");
      for (auto it = p["params"].begin(); it != p["params"].end(); ++it) {
        if (!it.value().is_number()) config_error("potential parameter '" + it.key() + "' must be numeric");
        s.params[it.key()] = it.value().get<double>();
      }
    }
    if (p.contains("file")) {
      fs::path f = get_or<std::string>(p, "file", "");
      if (f.is_relative()) f = base / f;
      if (!fs::exists(f)) config_error("potential file does not exist: " + f.string());
      s.potential_file = f.string();
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    check_keys(t, {"tol_rank", "tol_res"}, "tolerances");
    s.tol_rank = positive(get_or<double>(t, "tol_rank", s.tol_rank), "tol_rank");
    s.tol_res = positive(get_or<double>(t, "tol_res", s.tol_res), "tol_res");
  }
  if (j.contains("inverse")) {
    const json& t = j["inverse"];
    check_keys(t, {"lambdas", "n_random"}, "inverse");
    s.lambdas = get_or<std::vector<double>>(t, "lambdas", s.lambdas);
    if (s.lambdas.empty()) config_error("inverse.lambdas must be nonempty");
    for (double l : s.lambdas) positive(l, "inverse.lambdas");
    s.n_random = get_or<int>(t, "n_random", s.n_random);
    if (s.n_random < 1) config_error("inverse.n_random must be >= 1");
  }
  if (j.contains("evolve")) {
    const json& t = j["evolve"];
    check_keys(t, {"sigma", "eigen_weight", "project", "T_max", "t_fit_min", "dt", "method", "expect_exponent"}, "evolve");
    s.sigma = positive(get_or<double>(t, "sigma", s.sigma), "evolve.sigma");
    s.eigen_weight = get_or<double>(t, "eigen_weight", s.eigen_weight);
    s.project = get_or<bool>(t, "project", s.project);
    s.T_max = get_or<double>(t, "T_max", s.T_max);
    if (s.T_max < 0.0) config_error("evolve.T_max must be >= 0");
    s.t_fit_min = positive(get_or<double>(t, "t_fit_min", s.t_fit_min), "evolve.t_fit_min");
    s.dt = positive(get_or<double>(t, "dt", s.dt), "evolve.dt");
    const std::string m = get_or<std::string>(t, "method", "expm");
    if (m == "expm") s.method = PropMethod::EXPM_SQUARING;
    else if (m == "eigen") s.method = PropMethod::EIGEN_DECOMP;
    else config_error("evolve.method must be 'expm' or 'eigen'");
    if (t.contains("expect_exponent")) {
      const auto v = get_or<std::vector<double>>(t, "expect_exponent", {});
      if (v.size() != 2 || v[0] > v[1]) config_error("evolve.expect_exponent must be [lo, hi]");
      s.expect_exponent = std::make_pair(v[0], v[1]);
    }
  }
  if (j.contains("ftscan")) {
    const json& t = j["ftscan"];
    check_keys(t, {"window", "n", "lambda1", "project"}, "ftscan");
    s.window = parse_window(get_or<std::string>(t, "window", "LOW"));
    s.n_lambda = get_or<int>(t, "n", s.n_lambda);
    if (s.n_lambda < 8 || (s.n_lambda & (s.n_lambda - 1)) != 0) config_error("ftscan.n must be a power of two >= 8");
    s.lambda1 = get_or<double>(t, "lambda1", s.lambda1);
    if (!(s.lambda1 > 1.0)) config_error("ftscan.lambda1 must exceed 1");
    s.ft_project = get_or<bool>(t, "project", s.ft_project);
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream is(path);
  if (!is) config_error("cannot open config " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

ojson scenario_to_json(const Scenario& s) {
  ojson j;
  j["schema"] = kSchema;
  j["pipeline"] = pipeline_name(s.pipeline);
  j["grid"] = {{"mode", s.mode == GridMode::RADIAL_SWAVE ? "radial" : "box"}, {"L", s.L}, {"M", s.M}};
  ojson pot;
  pot["name"] = s.potential;
  ojson params = ojson::object();
  for (const auto& [k, v] : s.params) params[k] = v;
  pot["params"] = params;
  if (!s.potential_file.empty()) pot["file"] = s.potential_file;
  j["potential"] = pot;
  j["tolerances"] = {{"tol_rank", s.tol_rank}, {"tol_res", s.tol_res}};
  j["inverse"] = {{"lambdas", s.lambdas}, {"n_random", s.n_random}};
  ojson ev;
  ev["sigma"] = s.sigma;
  ev["eigen_weight"] = s.eigen_weight;
  ev["project"] = s.project;
  ev["T_max"] = s.T_max;
  ev["t_fit_min"] = s.t_fit_min;
  ev["dt"] = s.dt;
  ev["method"] = method_name(s.method);
  if (s.expect_exponent) ev["expect_exponent"] = {s.expect_exponent->first, s.expect_exponent->second};
  j["evolve"] = ev;
  j["ftscan"] = {{"window", window_name(s.window)}, {"n", s.n_lambda}, {"lambda1", s.lambda1}, {"project", s.ft_project}};
  return j;
}

std::vector<std::pair<std::string, Scenario>> builtin_scenarios() {
  std::vector<std::pair<std::string, Scenario>> out;
  Scenario th;
  th.pipeline = Pipeline::THRESHOLD;
  th.params["s"] = 2.0;
  out.emplace_back("threshold_exact_eigen", th);

  Scenario inv = th;
  inv.pipeline = Pipeline::INVERSE;
  out.emplace_back("invert_exact_eigen", inv);

  Scenario ef;
  ef.pipeline = Pipeline::EVOLVE;
  ef.L = 40.0;
  ef.M = 800;
  ef.potential = "zero";
  ef.project = false;
  ef.expect_exponent = std::make_pair(-1.6, -1.4);
  out.emplace_back("evolve_free", ef);

  Scenario ee;
  ee.pipeline = Pipeline::EVOLVE;
  ee.L = 100.0;
  ee.M = 1000;
  ee.params["s"] = 2.0;
  ee.eigen_weight = 0.05;
  ee.expect_exponent = std::make_pair(-1.65, -1.35);
  out.emplace_back("evolve_exact_eigen", ee);

  Scenario ft = th;
  ft.pipeline = Pipeline::FTSCAN;
  out.emplace_back("ftscan_low_exact_eigen", ft);

  Scenario full = th;
  full.pipeline = Pipeline::FULL;
  full.L = 100.0;
  full.M = 1000;
  full.eigen_weight = 0.05;
  full.n_random = 3;
  full.expect_exponent = std::make_pair(-1.65, -1.35);
  out.emplace_back("full_exact_eigen", full);

  Scenario bad;
  bad.pipeline = Pipeline::THRESHOLD;
  bad.potential = "gaussian_well";
  bad.params["depth"] = 1.0;
  bad.params["width"] = 1.0;
  out.emplace_back("threshold_gaussian_well", bad);
  return out;
}

ojson threshold_report_json(const ThresholdReport& r) {
  ojson j;
  j["dims"] = r.dims;
  std::vector<std::string> v;
  for (Verdict x : r.verdicts) v.emplace_back(verdict_name(x));
  j["verdicts"] = v;
  j["c0"] = r.c0;
  j["tol_rank"] = r.tol_rank;
  j["tol_res"] = r.tol_res;
  j["grid"] = {{"mode", r.mode == GridMode::RADIAL_SWAVE ? "RADIAL_SWAVE" : "BOX3D"}, {"L", r.L}, {"M", r.M}};
  return j;
}

RunResult run_scenario(const Scenario& sc, Pipeline p, const fs::path& out, const RunOptions& opt) {
  RunResult res;
  GridPtr grid;
  PotentialSpec V;
  try {
    if (opt.grid_scale != 1 && opt.grid_scale != 2) config_error("grid scale must be 1 or 2");
    grid = make_grid(sc.mode, sc.L, sc.M * opt.grid_scale);
    V = load_potential(sc, grid);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) config_error("cannot create output directory " + out.string());
  } catch (const Error& e) {
    res.exit_code = 3;
    res.failures.push_back(e.what());
    return res;
  }
  Context c{sc, grid, V, out, opt, res};
  try {
    switch (p) {
      case Pipeline::THRESHOLD: run_threshold(c); break;
      case Pipeline::INVERSE: run_inverse(c); break;
      case Pipeline::EVOLVE: run_evolve(c); break;
      case Pipeline::FTSCAN: run_ftscan(c); break;
      case Pipeline::FULL: {
        run_threshold(c);
        run_inverse(c);
        run_ftscan(c);
        const EvolveOutcome o = run_evolve(c);
        ojson j;
        j["grid"] = grid_json(*grid);
        j["tolerances"] = tol_json(sc);
        j["exponent_unprojected"] = o.exponent_free;
        j["exponent_projected"] = o.exponent_projected;
        j["projected"] = o.projected;
        j["failures"] = res.failures;
        write_json(out / "full_summary.json", j, res);
        break;
      }
    }
  } catch (const Error& e) {
    res.failures.push_back(e.what());
    res.exit_code = e.code() == ErrorCode::CONFIG ? 3 : 2;
    return res;
  }
  res.exit_code = res.failures.empty() ? 0 : 2;
  return res;
}

}  // namespace nsa
