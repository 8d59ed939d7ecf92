#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "betagas/ratefn.hpp"
#include "betagas/sampler.hpp"
#include "betagas/statistics.hpp"

namespace betagas {

/// Sampling effort per N.
struct ChainBudget {
  std::size_t chains = 1;
  std::size_t sweeps = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  /// Jump proposals per sweep divided by N; negative keeps the 1/N default.
  double jumps_per_particle = -1.0;
  bool affine_moves = true;
  double table_spacing = 1e-3;
};

struct EscapeExperiment {
  std::shared_ptr<const Potential> potential;
  std::optional<Domain> domain;
  Neighborhood neighborhood;
  /// Well location; optional only for control runs.
  std::optional<double> c0;
  double epsilon = 0.0;
  double beta = 0.0;
  std::vector<std::size_t> ns;
  ChainBudget budget;
  std::uint64_t seed = 0;
  /// Zero uses the available hardware threads.
  std::size_t workers = 0;
  std::shared_ptr<const DiscreteMeasure> initial_measure;
  /// Scan of the potential; required unless `control` is set.
  std::optional<CriticalityReport> certificate;
  /// Non-critical potential: no certificate needed, no exponent fit.
  bool control = false;
};

struct EscapeRow {
  std::size_t n = 0;
  std::size_t chains = 0;
  /// Recorded sweeps summed over chains.
  std::size_t samples = 0;
  /// Frequency of {some particle outside A}.
  double frequency = 0.0;
  ConfidenceInterval ci;
  double n_eff = 0.0;
  double tau = 1.0;
  double mean_count = 0.0;
  double count_stderr = 0.0;
  double mean_near = 0.0;
  /// 1 - frequency.
  double z_ratio = 1.0;
  /// Directly counted frequency of {all particles in A}.
  double all_inside = 1.0;
  std::uint32_t max_escapees = 0;
  double acceptance = 0.0;
  double jump_acceptance = 0.0;
};

struct EscapeTable {
  double beta = 0.0;
  bool control = false;
  std::vector<EscapeRow> rows;
};

struct ExponentFit {
  LinearFit fit;
  /// "probability" for beta > 1, "count" for beta < 1.
  std::string quantity;
  /// (1 - beta) / 2.
  double theory = 0.0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
};

/// Runs the chains of every N (in parallel) and tabulates escape statistics.
/// ConfigError for beta = 1 or an empty N list; PreconditionError when the
/// potential is not certified critical at c0 with q close to 2.
EscapeTable escape_probability(const EscapeExperiment& exp);

/// Throws PreconditionError unless the report holds exactly one critical
/// point, within `tolerance` of c0, with |q - 2| <= 0.1.
void certify_critical(const CriticalityReport& report, double c0, double tolerance);

/// OLS of log frequency (beta > 1) or log mean count (beta < 1) on log N.
/// SaturationError names the first N whose frequency is 0 or 1.
ExponentFit fit_escape_exponent(const EscapeTable& table);

/// int_{c0-eps}^{c0+eps} exp(-N J(x)) dx / sqrt(2 pi / (N J''(c0))), by
/// adaptive Gauss-Kronrod with relative `tolerance` on each half.
double laplace_ratio(const std::function<double(double)>& j, double c0, double epsilon, double n, double curvature,
                     double tolerance = 1e-14);
/// Same with J = rate function and J'' by central differences.
double laplace_ratio(const RateFunction& rf, double c0, double epsilon, double n);

struct ConcentrationRow {
  std::size_t n = 0;
  double variance = 0.0;
  double mean = 0.0;
  double ess = 0.0;
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  /// Variance at the largest N over variance at the smallest.
  double growth_ratio = 0.0;
  /// growth_ratio < 2.
  bool bounded = true;
};

/// Var(sum_i h(x_i)) per N. UndersampleError when a series has fewer than
/// 100 effective samples.
ConcentrationReport concentration_diagnostic(const std::vector<std::pair<std::size_t, std::vector<EnsembleState>>>& samples,
                                             const std::function<double(double)>& h);

struct PhaseTransitionRow {
  double beta = 0.0;
  EscapeRow row;
};

struct PhaseTransitionReport {
  std::size_t n = 0;
  std::vector<PhaseTransitionRow> rows;
  std::optional<ExponentFit> fit_below;
  std::optional<ExponentFit> fit_above;
  /// Every beta < 1 row lies above every beta > 1 row with disjoint CIs.
  bool pass = false;
  std::string verdict;
};

/// Compares the tables at a common N and attaches one fit on each side of 1.
PhaseTransitionReport phase_transition_report(const std::vector<EscapeTable>& tables, std::size_t n);
/// Runs one chain set per beta at the single size n, then compares.
PhaseTransitionReport phase_transition_report(const EscapeExperiment& base, const std::vector<double>& betas,
                                              std::size_t n);

/// Sweeps thinned states of one chain (the observer's copies).
std::vector<EnsembleState> collect_states(const ChainConfig& config);

/// Window outside of which J exceeds `budget` / n_max on both sides of the
/// support, searched on the nodes of the equilibrium grid.
Interval truncation_window(const RateFunction& rf, std::size_t n_max, double budget = 50.0);

/// Runs `jobs` on `workers` threads (0 = hardware concurrency).
void run_parallel(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace betagas
