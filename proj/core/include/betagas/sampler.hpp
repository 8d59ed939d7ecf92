#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "betagas/domain.hpp"
#include "betagas/measure.hpp"
#include "betagas/potential.hpp"
#include "betagas/statistics.hpp"

namespace betagas {

/// Engine plus the normal distribution whose spare draw is part of the state.
struct Rng {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit Rng(std::uint64_t seed = 0) : engine(seed) {}
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine); }
  double gaussian() { return normal(engine); }

  std::string serialize() const;
  static Rng deserialize(const std::string& text);
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
/// Seed for chain `chain` of the (beta, n) cell of an experiment.
std::uint64_t chain_seed(std::uint64_t global, double beta, std::size_t n, std::size_t chain) noexcept;

/// Potential with every log-field piece replaced by a cubic Hermite table.
///
/// Pieces without a log field are evaluated exactly. The largest table error
/// seen at cell midpoints during construction is kept for inspection.
class FastPotential {
 public:
  explicit FastPotential(std::shared_ptr<const Potential> exact, double spacing = 1e-3);

  /// V(x), or +inf outside the domain.
  double operator()(double x) const noexcept;
  const Potential& exact() const noexcept { return *exact_; }
  double max_table_error() const noexcept { return max_error_; }

 private:
  struct Table {
    double lo = 0.0;
    double step = 0.0;
    std::vector<double> value;
    std::vector<double> slope;
  };
  std::shared_ptr<const Potential> exact_;
  std::vector<double> piece_hi_;
  std::vector<std::optional<Table>> tables_;
  double max_error_ = 0.0;
};

struct EnsembleState {
  std::vector<double> positions;
  /// Optional cached sums sum_{j != i} log|x_i - x_j|; empty when unused.
  std::vector<double> interactions;
  /// Box index of every particle in restricted mode; empty in free mode.
  std::vector<std::uint32_t> boxes;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return positions.size(); }
};

/// Fixed filling fractions: `counts[h]` particles confined to `boxes[h]`.
struct RestrictedMode {
  std::vector<Interval> boxes;
  std::vector<std::size_t> counts;
};

struct ChainConfig {
  std::size_t n = 0;
  double beta = 0.0;
  std::shared_ptr<const Potential> potential;
  /// Sampling domain; the potential's domain when absent.
  std::optional<Domain> domain;
  /// Sweeps recorded after burn-in.
  std::size_t steps = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  /// Random-walk scale; negative starts at 1/N, zero makes every sweep the identity.
  double proposal_scale = -1.0;
  /// Adapt scales during burn-in toward `target_acceptance`, then freeze them.
  bool tune = true;
  double target_acceptance = 0.4;
  std::uint64_t seed = 0;
  std::optional<RestrictedMode> restricted;
  /// Expected independence (jump) proposals per sweep; negative means 1/N.
  double jump_rate = -1.0;
  /// One translation and one dilation of the particles in A per sweep.
  bool affine_moves = false;
  /// A: escapes are counted outside it; jumps and affine moves use its hull.
  Neighborhood neighborhood;
  std::optional<double> c0;
  double epsilon = 0.0;
  /// Initial positions are quantiles of this measure when given.
  std::shared_ptr<const DiscreteMeasure> initial_measure;
  bool cache_interactions = false;
  /// Hermite table spacing for log-field pieces; zero evaluates V exactly.
  double table_spacing = 1e-3;
  /// Recompute the log density from scratch every this many sweeps.
  std::size_t resync_interval = 1024;
};

struct ObservableRecord {
  std::size_t sweep = 0;
  /// Log of the unnormalized density.
  double log_density = 0.0;
  /// Particles outside the open set A.
  std::uint32_t escape_count = 0;
  /// Particles in (c0 - eps, c0 + eps).
  std::uint32_t near_count = 0;
  /// Single-site acceptance during this sweep.
  double acceptance = 0.0;
};

struct MoveCounts {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  double rate() const noexcept { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 1.0; }
  MoveCounts& operator+=(const MoveCounts& o) noexcept {
    proposed += o.proposed;
    accepted += o.accepted;
    return *this;
  }
};

struct SweepStats {
  MoveCounts single;
  MoveCounts jump;
  MoveCounts translate;
  MoveCounts dilate;
  /// Change of the log density over the sweep.
  double log_density_change = 0.0;
  SweepStats& operator+=(const SweepStats& o) noexcept;
};

struct ProposalScales {
  double single = 0.0;
  double translate = 0.0;
  double dilate = 0.0;
};

/// -(N beta / 2) sum V(x_i) + beta sum_{i<j} log|x_i - x_j|.
/// -inf for a position outside the domain or two coincident positions.
double log_density(const EnsembleState& state, const Potential& v, double beta);
double log_density(const EnsembleState& state, const Potential& v, const Domain& b, double beta);

/// Validated chain configuration with its transition kernel.
class ChainKernel {
 public:
  explicit ChainKernel(ChainConfig config);

  const ChainConfig& config() const noexcept { return config_; }
  const Domain& domain() const noexcept { return domain_; }
  const FastPotential& potential() const noexcept { return *fast_; }
  const ProposalScales& scales() const noexcept { return scales_; }
  void set_scales(const ProposalScales& s) noexcept { scales_ = s; }

  EnsembleState initial_state() const;
  /// Log density with the tabulated potential.
  double log_density(const EnsembleState& state) const;
  /// Full recomputation of the cached interaction sums.
  void refresh_cache(EnsembleState& state) const;
  /// Largest |cached - recomputed| interaction sum.
  double cache_error(const EnsembleState& state) const;

  SweepStats sweep(EnsembleState& state, Rng& rng) const;
  /// Log Metropolis-Hastings ratio for moving particle i to y, the value the
  /// sweep compares against log u. Jumps include the proposal-density ratio.
  /// -inf when y is not admissible.
  double move_log_ratio(const EnsembleState& state, std::size_t i, double y, bool jump) const;
  /// Density of the free-mode jump proposal at y.
  double jump_density(double y) const noexcept;
  ObservableRecord observe(const EnsembleState& state, std::size_t sweep, double log_density,
                           const SweepStats& stats) const;

 private:
  double pair_delta(const EnsembleState& s, std::size_t i, double y) const noexcept;
  double site_sum(const EnsembleState& s, std::size_t i, double y) const noexcept;
  void commit_site(EnsembleState& s, std::size_t i, double y, double new_sum) const;
  bool admissible(const EnsembleState& s, std::size_t i, double y) const noexcept;
  double site_log_ratio(const EnsembleState& s, std::size_t i, double y, double& fresh) const noexcept;
  double draw_jump(Rng& rng) const;
  void single_site(EnsembleState& s, Rng& rng, SweepStats& st) const;
  void jump(EnsembleState& s, Rng& rng, SweepStats& st) const;
  void affine(EnsembleState& s, Rng& rng, SweepStats& st, bool dilation) const;

  ChainConfig config_;
  Domain domain_;
  std::shared_ptr<const FastPotential> fast_;
  ProposalScales scales_;
  double field_ = 0.0;  // N beta / 2
  double jump_rate_ = 0.0;
  std::optional<Interval> affine_region_;
  std::vector<double> jump_weights_;
  std::optional<Interval> hull_a_;
};

/// One pass of single-site moves plus the configured jump and affine moves.
SweepStats mcmc_sweep(EnsembleState& state, const ChainKernel& kernel, Rng& rng);

/// Everything needed to continue a chain bit-for-bit.
struct Checkpoint {
  EnsembleState state;
  std::string rng;
  ProposalScales scales;
  std::size_t sweep = 0;
  double log_density = 0.0;
  SweepStats window;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& text);
};

struct ChainResult {
  std::vector<ObservableRecord> records;
  EnsembleState final_state;
  ProposalScales scales;
  SweepStats totals;
  Checkpoint checkpoint;
};

using ChainObserver = std::function<void(const EnsembleState&, const ObservableRecord&)>;

/// Burn-in, then `steps` sweeps recorded every `thinning`. Deterministic in
/// the seed. ConfigError for nonpositive steps or thinning.
ChainResult run_chain_full(const ChainConfig& config, const ChainObserver& observer = {},
                           const Checkpoint* resume = nullptr, std::size_t stop_after = 0);
std::vector<ObservableRecord> run_chain(const ChainConfig& config);

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL, ascending.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> diagonal, std::vector<double> offdiagonal);

/// Exact draw of the ensemble with V(x) = x^2 on the real line.
std::vector<double> tridiagonal_sample(std::size_t n, double beta, Rng& rng);

/// Monte Carlo mean of sum_i 1 / (x - x_i). MarginError when x is within
/// `margin` of the closure of A.
MeanEstimate estimate_correlator(std::span<const EnsembleState> samples, double x, const Neighborhood& a,
                                 double margin = 0.0);

}  // namespace betagas
