#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "betagas/equilibrium.hpp"
#include "betagas/experiments.hpp"
#include "betagas/potential.hpp"
#include "betagas/ratefn.hpp"
#include "betagas/sampler.hpp"

namespace betagas::cli {

struct CriticalSection {
  Neighborhood neighborhood;
  std::optional<double> c0;
  std::optional<double> depth;
  int power = 2;
};

struct SampleSection {
  std::size_t n = 0;
  double beta = 0.0;
  std::size_t steps = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::size_t chains = 1;
  double proposal_scale = -1.0;
  double jumps_per_particle = -1.0;
  bool affine_moves = false;
  bool cache_interactions = false;
  bool write_positions = false;
  Neighborhood neighborhood;
  std::optional<double> epsilon;
  std::optional<RestrictedMode> restricted;
};

struct ExperimentSection {
  std::vector<double> betas;
  std::vector<std::size_t> ns;
  double epsilon = 0.0;
  ChainBudget budget;
  /// Per-beta override of the recorded sweeps per chain.
  std::map<double, std::size_t> sweeps_by_beta;
  std::size_t scan_resolution = 2001;
  double laplace_n = 1e4;
  bool control = false;
  double slope_tolerance_below = 0.15;
  double slope_tolerance_above = 0.25;
  /// Control runs must stay below this frequency.
  double control_threshold = 0.01;
};

/// Parsed configuration file. Physical parameters have no defaults.
struct RunConfig {
  std::filesystem::path path;
  std::string text;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  Domain domain = Domain::interval(0.0, 1.0);
  YAML::Node potential_node;
  std::optional<CriticalSection> critical;
  GridConfig grid;
  std::optional<SampleSection> sample;
  std::optional<ExperimentSection> experiment;
  std::size_t scan_resolution = 2001;
  std::optional<Neighborhood> scan_neighborhood;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

/// Grid CSV with at least node,weight columns; optional cell_lo,cell_hi.
std::shared_ptr<DiscreteMeasure> read_measure_csv(const std::filesystem::path& path);

Potential build_potential(const YAML::Node& node, const Domain& domain, const std::filesystem::path& base_dir);

/// Base potential, optional critical construction, and the equilibrium of
/// the final potential.
struct ResolvedModel {
  std::shared_ptr<const Potential> base;
  std::shared_ptr<const EquilibriumSolution> base_solution;
  std::optional<CriticalPotential> critical;
  std::shared_ptr<const Potential> potential;
  std::shared_ptr<const EquilibriumSolution> solution;
};

ResolvedModel resolve_model(const RunConfig& cfg);

}  // namespace betagas::cli
