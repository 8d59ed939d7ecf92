#include "betagas/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "betagas/cli/config.hpp"
#include "betagas/cli/io.hpp"
#include "betagas/errors.hpp"

namespace betagas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool quiet = false;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string tag(double beta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", beta);
  return buf;
}

const char* edge_name(EdgeKind k) { return k == EdgeKind::hard ? "hard" : "soft"; }

json intervals_json(const std::vector<Interval>& ivs) {
  json out = json::array();
  for (const auto& iv : ivs) out.push_back({iv.lo, iv.hi});
  return out;
}

json solution_json(const EquilibriumSolution& sol) {
  json j;
  j["nodes"] = sol.measure.size();
  j["support"] = json::array();
  for (const auto& s : sol.support)
    j["support"].push_back({{"lo", s.bounds.lo}, {"hi", s.bounds.hi}, {"mass", s.mass},
                            {"lower_edge", edge_name(s.lower)}, {"upper_edge", edge_name(s.upper)}});
  j["robin_constant"] = sol.robin_constant;
  j["filling_fractions"] = sol.filling_fractions;
  j["residuals"] = {{"on_support", sol.residuals.on_support}, {"off_support", sol.residuals.off_support}};
  j["energy_beta2"] = sol.energy_beta2;
  j["iterations"] = sol.iterations;
  j["polished"] = sol.polished;
  j["support_threshold"] = sol.support_threshold;
  const std::vector<double> thresholds{1e-4, 1e-3, 1e-2};
  j["cut_count_sensitivity"] = {{"thresholds", thresholds},
                                {"cuts", cut_count_sensitivity(sol.measure, sol.domain, thresholds)}};
  try {
    j["edge_regularity_min"] = check_edge_regularity(sol);
  } catch (const InconsistencyError& e) {
    j["edge_regularity_min"] = nullptr;
    j["edge_regularity_error"] = e.what();
  }
  return j;
}

std::string measure_csv(const DiscreteMeasure& mu) {
  std::string out = "node,weight,density,cell_lo,cell_hi\n";
  for (std::size_t i = 0; i < mu.size(); ++i)
    out += num(mu.node(i)) + "," + num(mu.weight(i)) + "," + num(mu.density(i)) + "," + num(mu.cell(i).lo) + "," +
           num(mu.cell(i).hi) + "\n";
  return out;
}

json critical_json(const CriticalPotential& cp) {
  return {{"c0", cp.c0},
          {"depth", cp.depth},
          {"power", cp.power},
          {"base_constant", cp.base_constant},
          {"matched_value", cp.matched_value},
          {"gluing_point", cp.gluing_point},
          {"epsilon", cp.epsilon}};
}

json report_json(const CriticalityReport& r) {
  json j;
  j["points"] = json::array();
  for (const auto& p : r.points)
    j["points"].push_back({{"c0", p.location},
                           {"value", p.value},
                           {"second_derivative", p.curvature},
                           {"exponent_q", p.exponent},
                           {"beta_q", p.beta_threshold},
                           {"epsilon", p.epsilon},
                           {"scan_artifact", p.exponent < 1.8}});
  j["neighborhood"] = intervals_json(r.neighborhood);
  j["tolerance"] = r.tolerance;
  j["grid_step"] = r.grid_step;
  j["min_value"] = r.min_value;
  j["degenerate_plateaus"] = intervals_json(r.degenerate_plateaus);
  return j;
}

json row_json(const EscapeRow& r) {
  return {{"n", r.n},
          {"chains", r.chains},
          {"samples", r.samples},
          {"frequency", r.frequency},
          {"ci", {r.ci.lo, r.ci.hi}},
          {"n_eff", r.n_eff},
          {"tau", r.tau},
          {"mean_count", r.mean_count},
          {"count_stderr", r.count_stderr},
          {"mean_near", r.mean_near},
          {"z_ratio", r.z_ratio},
          {"all_inside", r.all_inside},
          {"max_escapees", r.max_escapees},
          {"acceptance", r.acceptance},
          {"jump_acceptance", r.jump_acceptance}};
}

json fit_json(const ExponentFit& f) {
  return {{"quantity", f.quantity},      {"slope", f.fit.slope},      {"intercept", f.fit.intercept},
          {"stderr", f.fit.slope_stderr}, {"r_squared", f.fit.r_squared}, {"theory", f.theory},
          {"n_min", f.n_min},             {"n_max", f.n_max}};
}

std::string table_csv(const EscapeTable& t) {
  std::string out =
      "n,chains,samples,frequency,ci_lo,ci_hi,n_eff,tau,mean_count,count_stderr,mean_near,z_ratio,all_inside,max_escapees\n";
  for (const auto& r : t.rows)
    out += std::to_string(r.n) + "," + std::to_string(r.chains) + "," + std::to_string(r.samples) + "," +
           num(r.frequency) + "," + num(r.ci.lo) + "," + num(r.ci.hi) + "," + num(r.n_eff) + "," + num(r.tau) + "," +
           num(r.mean_count) + "," + num(r.count_stderr) + "," + num(r.mean_near) + "," + num(r.z_ratio) + "," +
           num(r.all_inside) + "," + std::to_string(r.max_escapees) + "\n";
  return out;
}

std::string table_dat(const EscapeTable& t) {
  std::string out = "# log(N) log(quantity)   quantity = " + std::string(t.beta > 1.0 ? "frequency" : "mean count") +
                    "; then N frequency ci_lo ci_hi mean_count\n";
  for (const auto& r : t.rows) {
    const double q = t.beta > 1.0 ? r.frequency : r.mean_count;
    out += num(std::log(static_cast<double>(r.n))) + " " + (q > 0.0 ? num(std::log(q)) : std::string("nan")) + " " +
           std::to_string(r.n) + " " + num(r.frequency) + " " + num(r.ci.lo) + " " + num(r.ci.hi) + " " +
           num(r.mean_count) + "\n";
  }
  return out;
}

class Progress {
 public:
  Progress(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  void operator()(const std::string& msg) const {
    if (!quiet_) err_ << "[betagas] " << msg << "\n";
  }

 private:
  std::ostream& err_;
  bool quiet_;
};

void apply_globals(RunConfig& cfg, const GlobalOptions& g) {
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
}

Neighborhood default_neighborhood(const EquilibriumSolution& sol) {
  Neighborhood a;
  const double pad = 0.05 * (sol.support.back().bounds.hi - sol.support.front().bounds.lo);
  for (const auto& s : sol.support) a.push_back({s.bounds.lo - pad, s.bounds.hi + pad});
  return a;
}

// ---------------------------------------------------------------- equilibrium

int cmd_equilibrium(const fs::path& config_path, const fs::path& out_dir, const GlobalOptions& g, const Progress& log) {
  RunConfig cfg = load_config(config_path);
  apply_globals(cfg, g);
  log("solving equilibrium on " + std::to_string(cfg.grid.nodes) + " nodes");
  const ResolvedModel m = resolve_model(cfg);
  OutputDir out(out_dir);
  out.write("config.yaml", cfg.text);
  out.write("measure.csv", measure_csv(m.solution->measure));
  json summary = solution_json(*m.solution);
  summary["config_dir"] = fs::absolute(config_path).parent_path().string();
  if (m.critical) {
    out.write("base_measure.csv", measure_csv(m.base_solution->measure));
    summary["critical"] = critical_json(*m.critical);
    summary["base"] = solution_json(*m.base_solution);
  }
  out.write_json("summary.json", summary);
  out.write_manifest("equilibrium", cfg.text, cfg.seed, cfg.workers);
  log("support intervals: " + std::to_string(m.solution->support.size()) +
      ", C_V = " + num(m.solution->robin_constant));
  return kExitOk;
}

// ----------------------------------------------------------------------- scan

int cmd_scan(const fs::path& eq_dir, const fs::path& out_file, const GlobalOptions& g, const Progress& log) {
  std::ifstream sfile(eq_dir / "summary.json");
  if (!sfile) throw ConfigError("no summary.json in " + eq_dir.string());
  const json summary = json::parse(sfile);
  std::ifstream cfile(eq_dir / "config.yaml");
  if (!cfile) throw ConfigError("no config.yaml in " + eq_dir.string());
  std::stringstream text;
  text << cfile.rdbuf();
  const fs::path base_dir = summary.value("config_dir", eq_dir.string());
  RunConfig cfg = parse_config(text.str(), base_dir);
  apply_globals(cfg, g);

  auto base = std::make_shared<Potential>(build_potential(cfg.potential_node, cfg.domain, base_dir));
  std::shared_ptr<const Potential> v = base;
  if (cfg.critical) {
    CriticalPotentialSpec spec;
    spec.base_measure = read_measure_csv(eq_dir / "base_measure.csv");
    spec.neighborhood = cfg.critical->neighborhood;
    spec.c0 = cfg.critical->c0;
    spec.depth = cfg.critical->depth;
    spec.power = cfg.critical->power;
    spec.support_threshold = cfg.grid.support_threshold;
    v = std::make_shared<Potential>(build_critical_potential(spec, *base).potential);
  }
  const auto mu = read_measure_csv(eq_dir / "measure.csv");
  const Domain dom = cfg.grid.window ? cfg.domain.clipped(*cfg.grid.window) : cfg.domain;
  auto sol = std::make_shared<EquilibriumSolution>(analyze_measure(*mu, dom, *v, cfg.grid.support_threshold));
  const RateFunction rf(sol, v);
  Neighborhood a = cfg.scan_neighborhood ? *cfg.scan_neighborhood
                                         : (cfg.critical ? cfg.critical->neighborhood : default_neighborhood(*sol));
  log("scanning rate function at resolution " + std::to_string(cfg.scan_resolution));
  const CriticalityReport rep = scan_criticality(rf, a, cfg.scan_resolution);

  const fs::path dir = out_file.has_parent_path() ? out_file.parent_path() : fs::path(".");
  OutputDir out(dir);
  out.write_json(out_file.filename().string(), report_json(rep));
  out.write_manifest("scan", cfg.text, cfg.seed, cfg.workers, out_file.stem().string() + ".");
  log("critical points found: " + std::to_string(rep.points.size()));
  return kExitOk;
}

// --------------------------------------------------------------------- sample

int cmd_sample(const fs::path& config_path, const fs::path& out_dir, const std::optional<fs::path>& resume,
               const GlobalOptions& g, const Progress& log) {
  RunConfig cfg = load_config(config_path);
  apply_globals(cfg, g);
  if (!cfg.sample) throw ConfigError("config has no 'sample' section");
  const SampleSection& s = *cfg.sample;
  if (!(s.beta > 0.0)) throw ConfigError("sample.beta must be positive");

  std::shared_ptr<const Potential> v;
  std::shared_ptr<const DiscreteMeasure> init;
  std::optional<double> c0;
  double epsilon = s.epsilon.value_or(0.0);
  Neighborhood a = s.neighborhood;
  const bool solvable = cfg.critical || cfg.domain.bounded() || cfg.grid.window;
  if (solvable) {
    const ResolvedModel m = resolve_model(cfg);
    v = m.potential;
    init = std::make_shared<DiscreteMeasure>(m.solution->measure);
    if (m.critical) {
      c0 = m.critical->c0;
      if (!s.epsilon) epsilon = m.critical->epsilon;
      if (a.empty()) a = cfg.critical->neighborhood;
    }
  } else {
    v = std::make_shared<Potential>(build_potential(cfg.potential_node, cfg.domain, config_path.parent_path()));
  }
  if (c0 && !(epsilon > 0.0)) throw ConfigError("sample.epsilon must be positive");

  OutputDir out(out_dir);
  out.write("config.yaml", cfg.text);
  std::vector<ChainResult> results(s.chains);
  std::vector<std::string> records(s.chains), positions(s.chains);
  std::vector<std::optional<Checkpoint>> checkpoints(s.chains);
  if (resume) {
    for (std::size_t k = 0; k < s.chains; ++k) {
      std::ifstream in(*resume / ("checkpoint_chain" + std::to_string(k) + ".json"));
      if (!in) throw ConfigError("missing checkpoint for chain " + std::to_string(k) + " in " + resume->string());
      std::stringstream ss;
      ss << in.rdbuf();
      checkpoints[k] = Checkpoint::deserialize(ss.str());
    }
  }
  log("sampling " + std::to_string(s.chains) + " chain(s), N = " + std::to_string(s.n));
  run_parallel(s.chains, cfg.workers, [&](std::size_t k) {
    ChainConfig c;
    c.n = s.n;
    c.beta = s.beta;
    c.potential = v;
    c.domain = cfg.domain;
    c.steps = s.steps;
    c.burn_in = s.burn_in;
    c.thinning = s.thinning;
    c.proposal_scale = s.proposal_scale;
    c.seed = chain_seed(cfg.seed, s.beta, s.n, k);
    c.restricted = s.restricted;
    c.jump_rate = s.jumps_per_particle < 0.0 ? -1.0 : s.jumps_per_particle * static_cast<double>(s.n);
    c.affine_moves = s.affine_moves;
    c.neighborhood = a;
    c.c0 = c0;
    c.epsilon = epsilon;
    c.initial_measure = init;
    c.cache_interactions = s.cache_interactions;
    // A resumed chain is already past burn-in; it runs `steps` more sweeps.
    if (checkpoints[k]) c.burn_in = std::max(c.burn_in, checkpoints[k]->sweep);
    std::string& rec = records[k];
    std::string& pos = positions[k];
    rec = "sweep,log_density,escape_count,near_count,acceptance\n";
    results[k] = run_chain_full(c, [&](const EnsembleState& st, const ObservableRecord& r) {
      rec += std::to_string(r.sweep) + "," + num(r.log_density) + "," + std::to_string(r.escape_count) + "," +
             std::to_string(r.near_count) + "," + num(r.acceptance) + "\n";
      if (s.write_positions) {
        for (std::size_t i = 0; i < st.size(); ++i) pos += (i ? "," : "") + num(st.positions[i]);
        pos += "\n";
      }
    }, checkpoints[k] ? &*checkpoints[k] : nullptr);
  });

  json summary;
  summary["n"] = s.n;
  summary["beta"] = s.beta;
  summary["chains"] = json::array();
  for (std::size_t k = 0; k < s.chains; ++k) {
    const auto& r = results[k];
    out.write("records_chain" + std::to_string(k) + ".csv", records[k]);
    if (s.write_positions) out.write("positions_chain" + std::to_string(k) + ".csv", positions[k]);
    out.write("checkpoint_chain" + std::to_string(k) + ".json", r.checkpoint.serialize());
    std::vector<double> escaped;
    for (const auto& rec : r.records) escaped.push_back(rec.escape_count > 0 ? 1.0 : 0.0);
    const MeanEstimate e = estimate_mean(escaped);
    summary["chains"].push_back({{"seed", chain_seed(cfg.seed, s.beta, s.n, k)},
                                 {"records", r.records.size()},
                                 {"single_acceptance", r.totals.single.rate()},
                                 {"jump_acceptance", r.totals.jump.rate()},
                                 {"proposal_scale", r.scales.single},
                                 {"escape_frequency", e.mean},
                                 {"escape_tau", e.tau}});
  }
  out.write_json("summary.json", summary);
  out.write_manifest("sample", cfg.text, cfg.seed, cfg.workers);
  return kExitOk;
}

// ----------------------------------------------------------------- experiment

struct Claim {
  std::string name;
  bool pass;
  std::string detail;
};

int cmd_experiment(const fs::path& config_path, const fs::path& out_dir, const std::optional<double>& beta_override,
                   const GlobalOptions& g, const Progress& log, std::ostream& stdout_) {
  RunConfig cfg = load_config(config_path);
  apply_globals(cfg, g);
  if (!cfg.experiment) throw ConfigError("config has no 'experiment' section");
  ExperimentSection ex = *cfg.experiment;
  if (beta_override) ex.betas = {*beta_override};
  for (double b : ex.betas) {
    if (b == 1.0)
      throw ConfigError("beta = 1 is the critical case of the transition; it is not supported, choose beta < 1 or beta > 1");
    if (!(b > 0.0)) throw ConfigError("every beta must be positive");
  }
  if (ex.ns.empty()) throw ConfigError("experiment.ns is empty");
  if (!ex.control && !cfg.critical) throw ConfigError("a non-control experiment needs a 'critical' section");

  log("resolving potential and equilibrium");
  const ResolvedModel m = resolve_model(cfg);
  auto rf = std::make_shared<RateFunction>(m.solution, m.potential);
  const Neighborhood a = cfg.critical ? cfg.critical->neighborhood
                                      : (cfg.scan_neighborhood ? *cfg.scan_neighborhood : default_neighborhood(*m.solution));
  const CriticalityReport scan = scan_criticality(*rf, a, ex.scan_resolution);

  OutputDir out(out_dir);
  out.write("config.yaml", cfg.text);
  out.write("measure.csv", measure_csv(m.solution->measure));
  out.write_json("criticality.json", report_json(scan));
  {
    std::string dat = "# x J(x)\n";
    const Interval w = m.solution->domain.hull();
    for (int k = 0; k <= 2000; ++k) {
      const double x = w.lo + (w.hi - w.lo) * k / 2000.0;
      if (cfg.domain.contains(x)) dat += num(x) + " " + num((*rf)(x)) + "\n";
    }
    out.write("rate_function.dat", dat);
  }

  std::vector<Claim> claims;
  json report;
  report["equilibrium"] = solution_json(*m.solution);
  report["criticality"] = report_json(scan);
  if (m.critical) report["critical"] = critical_json(*m.critical);

  if (!ex.control) {
    try {
      certify_critical(scan, m.critical->c0, std::max(2.0 * scan.grid_step, 1e-6));
      claims.push_back({"certified critical point", true, "one c0 with q close to 2"});
    } catch (const PreconditionError& e) {
      throw;  // nothing else is meaningful
    }
    const auto& p = scan.points.front();
    const double ratio = laplace_ratio(*rf, p.location, ex.epsilon, ex.laplace_n);
    report["laplace_ratio"] = {{"n", ex.laplace_n}, {"value", ratio}};
    claims.push_back({"laplace ratio in [0.98, 1.02]", ratio >= 0.98 && ratio <= 1.02, num(ratio)});
  }

  std::vector<EscapeTable> tables;
  for (double beta : ex.betas) {
    EscapeExperiment e;
    e.potential = m.potential;
    e.domain = cfg.domain;
    e.neighborhood = a;
    if (m.critical) e.c0 = m.critical->c0;
    e.epsilon = ex.epsilon;
    e.beta = beta;
    e.ns = ex.ns;
    e.budget = ex.budget;
    if (auto it = ex.sweeps_by_beta.find(beta); it != ex.sweeps_by_beta.end()) e.budget.sweeps = it->second;
    e.seed = cfg.seed;
    e.workers = cfg.workers;
    e.initial_measure = std::make_shared<DiscreteMeasure>(m.solution->measure);
    e.certificate = scan;
    e.control = ex.control;
    log("escape chains for beta = " + tag(beta));
    tables.push_back(escape_probability(e));
    const EscapeTable& t = tables.back();
    out.write("escape_beta" + tag(beta) + ".csv", table_csv(t));
    out.write("escape_beta" + tag(beta) + ".dat", table_dat(t));
  }

  json jt = json::array();
  for (const auto& t : tables) {
    json row;
    row["beta"] = t.beta;
    row["rows"] = json::array();
    for (const auto& r : t.rows) row["rows"].push_back(row_json(r));
    if (ex.control) {
      bool below = true;
      for (const auto& r : t.rows) below = below && r.frequency < ex.control_threshold;
      claims.push_back({"non-critical control beta=" + tag(t.beta), below,
                        below ? "non-critical control PASS" : "escape frequency above the control threshold"});
    } else {
      bool monotone = true;
      for (std::size_t i = 1; i < t.rows.size(); ++i)
        monotone = monotone && (t.beta > 1.0 ? t.rows[i].frequency < t.rows[i - 1].frequency
                                             : t.rows[i].frequency > t.rows[i - 1].frequency);
      claims.push_back({std::string(t.beta > 1.0 ? "decreasing" : "increasing") + " escape frequency beta=" + tag(t.beta),
                        monotone, ""});
      if (t.rows.size() >= 3) {
        try {
          const ExponentFit f = fit_escape_exponent(t);
          row["fit"] = fit_json(f);
          const double tol = t.beta > 1.0 ? ex.slope_tolerance_above : ex.slope_tolerance_below;
          claims.push_back({"exponent beta=" + tag(t.beta), std::abs(f.fit.slope - f.theory) <= tol,
                            "slope " + num(f.fit.slope) + " vs " + num(f.theory) + " +- " + num(tol)});
        } catch (const SaturationError& e) {
          row["fit_error"] = e.what();
          claims.push_back({"exponent beta=" + tag(t.beta), false, e.what()});
        }
      }
    }
    jt.push_back(row);
  }
  report["tables"] = jt;

  if (!ex.control && ex.betas.size() >= 2) {
    const std::size_t nmax = *std::max_element(ex.ns.begin(), ex.ns.end());
    const PhaseTransitionReport ph = phase_transition_report(tables, nmax);
    json jp;
    jp["n"] = ph.n;
    jp["pass"] = ph.pass;
    jp["verdict"] = ph.verdict;
    jp["rows"] = json::array();
    for (const auto& r : ph.rows) jp["rows"].push_back({{"beta", r.beta}, {"row", row_json(r.row)}});
    if (ph.fit_below) jp["fit_below"] = fit_json(*ph.fit_below);
    if (ph.fit_above) jp["fit_above"] = fit_json(*ph.fit_above);
    report["phase_transition"] = jp;
    claims.push_back({"phase transition at N=" + std::to_string(nmax), ph.pass, ph.verdict});
  }

  bool all = true;
  json jc = json::array();
  for (const auto& c : claims) {
    all = all && c.pass;
    jc.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    stdout_ << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
  }
  report["claims"] = jc;
  report["all_pass"] = all;
  report["seed"] = cfg.seed;
  out.write_json("report.json", report);
  out.write_manifest("experiment", cfg.text, cfg.seed, cfg.workers);
  return all ? kExitOk : kExitClaimFailed;
}

// --------------------------------------------------------------------- report

int cmd_report(const fs::path& dir, std::ostream& stdout_) {
  std::ifstream in(dir / "report.json");
  if (!in) throw ConfigError("no report.json in " + dir.string());
  const json r = json::parse(in);
  stdout_ << "seed " << r.value("seed", 0) << "\n";
  if (r.contains("critical"))
    stdout_ << "c0 " << r["critical"]["c0"] << "  depth " << r["critical"]["depth"] << "  epsilon "
            << r["critical"]["epsilon"] << "\n";
  for (const auto& t : r["tables"]) {
    stdout_ << "\nbeta = " << t["beta"] << "\n";
    stdout_ << "      N   frequency        95% CI              mean count   n_eff\n";
    for (const auto& row : t["rows"]) {
      char line[160];
      std::snprintf(line, sizeof line, "%7zu   %.6f   [%.6f, %.6f]   %.6f   %.0f\n", row["n"].get<std::size_t>(),
                    row["frequency"].get<double>(), row["ci"][0].get<double>(), row["ci"][1].get<double>(),
                    row["mean_count"].get<double>(), row["n_eff"].get<double>());
      stdout_ << line;
    }
    if (t.contains("fit"))
      stdout_ << "slope " << t["fit"]["slope"] << " +- " << t["fit"]["stderr"] << " (theory " << t["fit"]["theory"]
              << ", " << t["fit"]["quantity"].get<std::string>() << ")\n";
  }
  stdout_ << "\n";
  for (const auto& c : r["claims"])
    stdout_ << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "\n";
  return r.value("all_pass", false) ? kExitOk : kExitClaimFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibrium measures, rate functions and escape experiments for beta-ensembles", "betagas"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Global seed (overrides the config; default 1)");
  app.add_option("--workers", g.workers, "Worker threads (default: available cores)");
  app.add_flag("--quiet", g.quiet, "No progress output on stderr");

  fs::path config, out_path, eq_dir, report_dir;
  std::optional<fs::path> resume;
  std::optional<double> beta;

  auto* eq = app.add_subcommand("equilibrium", "Solve for the equilibrium measure");
  eq->add_option("--config", config, "YAML config")->required();
  eq->add_option("--out", out_path, "Output directory")->required();

  auto* scan = app.add_subcommand("scan", "Scan the rate function for critical points");
  scan->add_option("--equilibrium", eq_dir, "Output directory of `betagas equilibrium`")->required();
  scan->add_option("--out", out_path, "Report file (JSON)")->required();

  auto* sample = app.add_subcommand("sample", "Run Markov chains for the ensemble");
  sample->add_option("--config", config, "YAML config")->required();
  sample->add_option("--out", out_path, "Output directory")->required();
  sample->add_option("--resume", resume, "Directory holding checkpoints of a previous run");

  auto* exp = app.add_subcommand("experiment", "Escape-probability experiment");
  exp->add_option("--config", config, "YAML config")->required();
  exp->add_option("--out", out_path, "Output directory")->required();
  exp->add_option("--beta", beta, "Run a single beta instead of the configured list");

  auto* rep = app.add_subcommand("report", "Summarize an experiment directory");
  rep->add_option("dir", report_dir, "Experiment output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  const Progress log(err, g.quiet);
  try {
    if (*eq) return cmd_equilibrium(config, out_path, g, log);
    if (*scan) return cmd_scan(eq_dir, out_path, g, log);
    if (*sample) return cmd_sample(config, out_path, resume, g, log);
    if (*exp) return cmd_experiment(config, out_path, beta, g, log, out);
    if (*rep) return cmd_report(report_dir, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvalidSpecError& e) {
    err << "invalid critical-potential spec: " << e.what() << "\n";
    return kExitValidation;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "malformed input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace betagas::cli
