#include "betagas/cli/config.hpp"

#include <fstream>
#include <sstream>

#include "betagas/errors.hpp"

namespace betagas::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
T get(const YAML::Node& node, const std::string& key) {
  if (!node[key]) throw ConfigError("missing required key '" + key + "'");
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const YAML::Node& node, const std::string& key, T fallback) {
  return node[key] ? get<T>(node, key) : fallback;
}

Interval parse_interval(const YAML::Node& node) {
  if (!node.IsSequence() || node.size() != 2) throw ConfigError("an interval is a two-element list [lo, hi]");
  return {node[0].as<double>(), node[1].as<double>()};
}

// [lo, hi] or [[lo, hi], ...].
std::vector<Interval> parse_intervals(const YAML::Node& node) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError("expected a list of intervals");
  if (node[0].IsScalar()) return {parse_interval(node)};
  std::vector<Interval> out;
  for (const auto& item : node) out.push_back(parse_interval(item));
  return out;
}

std::vector<Term> parse_terms(const YAML::Node& node, const fs::path& base_dir) {
  std::vector<Term> terms;
  if (node["polynomial"]) terms.push_back(PolynomialTerm{node["polynomial"].as<std::vector<double>>()});
  if (node["wells"]) {
    for (const auto& w : node["wells"])
      terms.push_back(WellTerm{get<double>(w, "depth"), get<double>(w, "center"), get_or<int>(w, "power", 2)});
  }
  if (node["log_field"]) {
    const fs::path file = base_dir / node["log_field"].as<std::string>();
    terms.push_back(LogFieldTerm{read_measure_csv(file), file.filename().string()});
  }
  if (terms.empty()) throw ConfigError("a potential piece needs polynomial, wells or log_field");
  return terms;
}

SampleSection parse_sample(const YAML::Node& n) {
  SampleSection s;
  s.n = get<std::size_t>(n, "n");
  s.beta = get<double>(n, "beta");
  s.steps = get<std::size_t>(n, "steps");
  s.burn_in = get_or<std::size_t>(n, "burn_in", 0);
  s.thinning = get_or<std::size_t>(n, "thinning", 1);
  s.chains = get_or<std::size_t>(n, "chains", 1);
  s.proposal_scale = get_or<double>(n, "proposal_scale", -1.0);
  s.jumps_per_particle = get_or<double>(n, "jumps_per_particle", -1.0);
  s.affine_moves = get_or<bool>(n, "affine_moves", false);
  s.cache_interactions = get_or<bool>(n, "cache_interactions", false);
  s.write_positions = get_or<bool>(n, "write_positions", false);
  if (n["neighborhood"]) s.neighborhood = parse_intervals(n["neighborhood"]);
  if (n["epsilon"]) s.epsilon = n["epsilon"].as<double>();
  if (n["restricted"]) {
    RestrictedMode r;
    r.boxes = parse_intervals(n["restricted"]["boxes"]);
    r.counts = get<std::vector<std::size_t>>(n["restricted"], "counts");
    s.restricted = r;
  }
  return s;
}

ExperimentSection parse_experiment(const YAML::Node& n) {
  ExperimentSection e;
  e.betas = get<std::vector<double>>(n, "betas");
  e.ns = get<std::vector<std::size_t>>(n, "ns");
  e.epsilon = get<double>(n, "epsilon");
  e.budget.chains = get_or<std::size_t>(n, "chains", 1);
  e.budget.sweeps = get<std::size_t>(n, "sweeps");
  e.budget.burn_in = get_or<std::size_t>(n, "burn_in", 0);
  e.budget.thinning = get_or<std::size_t>(n, "thinning", 1);
  e.budget.jumps_per_particle = get_or<double>(n, "jumps_per_particle", -1.0);
  e.budget.affine_moves = get_or<bool>(n, "affine_moves", true);
  if (n["sweeps_by_beta"])
    for (const auto& kv : n["sweeps_by_beta"]) e.sweeps_by_beta[kv.first.as<double>()] = kv.second.as<std::size_t>();
  e.scan_resolution = get_or<std::size_t>(n, "scan_resolution", 2001);
  e.laplace_n = get_or<double>(n, "laplace_n", 1e4);
  e.control = get_or<bool>(n, "control", false);
  e.slope_tolerance_below = get_or<double>(n, "slope_tolerance_below", 0.15);
  e.slope_tolerance_above = get_or<double>(n, "slope_tolerance_above", 0.25);
  e.control_threshold = get_or<double>(n, "control_threshold", 0.01);
  if (!(e.epsilon > 0.0)) throw ConfigError("experiment.epsilon must be positive");
  return e;
}

}  // namespace

std::shared_ptr<DiscreteMeasure> read_measure_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measure file " + path.string());
  std::vector<double> nodes, weights;
  std::vector<Interval> cells;
  std::string line;
  bool with_cells = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string field;
    bool numeric = true;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        cols.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header
    if (cols.size() < 2) throw ConfigError("measure file rows need node,weight: " + path.string());
    nodes.push_back(cols[0]);
    weights.push_back(cols[1]);
    if (cols.size() >= 5)
      cells.push_back({cols[3], cols[4]});
    else
      with_cells = false;
  }
  if (nodes.empty()) throw ConfigError("measure file is empty: " + path.string());
  if (with_cells) return std::make_shared<DiscreteMeasure>(DiscreteMeasure::normalized(nodes, weights, cells));
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  return std::make_shared<DiscreteMeasure>(DiscreteMeasure::on_grid(nodes, weights));
}

Potential build_potential(const YAML::Node& node, const Domain& domain, const fs::path& base_dir) {
  if (!node) throw ConfigError("missing required section 'potential'");
  std::vector<Piece> pieces;
  if (node["pieces"]) {
    for (const auto& p : node["pieces"]) {
      Piece piece;
      piece.interval = parse_interval(p["interval"]);
      piece.terms = parse_terms(p, base_dir);
      piece.constant = get_or<double>(p, "constant", 0.0);
      pieces.push_back(std::move(piece));
    }
  } else {
    const auto terms = parse_terms(node, base_dir);
    const double constant = get_or<double>(node, "constant", 0.0);
    for (const auto& iv : domain.intervals()) pieces.push_back(Piece{iv, terms, constant});
  }
  return Potential(domain, std::move(pieces));
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.text = text;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  try {
    cfg.seed = get_or<std::uint64_t>(root, "seed", 1);
    cfg.workers = get_or<std::size_t>(root, "workers", 0);
    cfg.domain = Domain(parse_intervals(get<YAML::Node>(root, "domain")));
    cfg.potential_node = root["potential"];
    // Validate eagerly so that bad pieces surface as configuration errors.
    (void)build_potential(cfg.potential_node, cfg.domain, base_dir);
    if (const auto c = root["critical"]) {
      CriticalSection cs;
      cs.neighborhood = parse_intervals(get<YAML::Node>(c, "neighborhood"));
      if (c["c0"]) cs.c0 = c["c0"].as<double>();
      if (c["depth"]) cs.depth = c["depth"].as<double>();
      cs.power = get_or<int>(c, "power", 2);
      cfg.critical = cs;
    }
    if (const auto g = root["grid"]) {
      cfg.grid.nodes = get_or<std::size_t>(g, "nodes", cfg.grid.nodes);
      cfg.grid.tolerance = get_or<double>(g, "tolerance", cfg.grid.tolerance);
      cfg.grid.max_iterations = get_or<std::size_t>(g, "max_iterations", cfg.grid.max_iterations);
      cfg.grid.support_threshold = get_or<double>(g, "support_threshold", cfg.grid.support_threshold);
      if (g["window"]) cfg.grid.window = parse_interval(g["window"]);
    }
    if (const auto s = root["scan"]) {
      cfg.scan_resolution = get_or<std::size_t>(s, "resolution", cfg.scan_resolution);
      if (s["neighborhood"]) cfg.scan_neighborhood = parse_intervals(s["neighborhood"]);
    }
    if (root["sample"]) cfg.sample = parse_sample(root["sample"]);
    if (root["experiment"]) cfg.experiment = parse_experiment(root["experiment"]);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.path = base_dir;
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str(), path.parent_path());
  cfg.path = path;
  return cfg;
}

ResolvedModel resolve_model(const RunConfig& cfg) {
  const fs::path base_dir = cfg.path.has_filename() && fs::is_regular_file(cfg.path) ? cfg.path.parent_path() : cfg.path;
  ResolvedModel m;
  m.base = std::make_shared<Potential>(build_potential(cfg.potential_node, cfg.domain, base_dir));
  if (!cfg.critical) {
    m.potential = m.base;
    m.solution = std::make_shared<EquilibriumSolution>(solve_equilibrium(*m.potential, cfg.domain, cfg.grid));
    return m;
  }
  m.base_solution = std::make_shared<EquilibriumSolution>(solve_equilibrium(*m.base, cfg.domain, cfg.grid));
  CriticalPotentialSpec spec;
  spec.base_measure = std::make_shared<DiscreteMeasure>(m.base_solution->measure);
  spec.neighborhood = cfg.critical->neighborhood;
  spec.c0 = cfg.critical->c0;
  spec.depth = cfg.critical->depth;
  spec.power = cfg.critical->power;
  spec.support_threshold = cfg.grid.support_threshold;
  m.critical = build_critical_potential(spec, *m.base);
  m.potential = std::make_shared<Potential>(m.critical->potential);
  m.solution = std::make_shared<EquilibriumSolution>(
      solve_equilibrium(*m.potential, cfg.domain, cfg.grid, &m.base_solution->measure));
  return m;
}

}  // namespace betagas::cli
