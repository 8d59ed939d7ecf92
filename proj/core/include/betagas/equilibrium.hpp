#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "betagas/domain.hpp"
#include "betagas/measure.hpp"
#include "betagas/potential.hpp"

namespace betagas {

struct GridConfig {
  std::size_t nodes = 512;
  /// Truncation window; required when the domain is unbounded.
  std::optional<Interval> window;
  /// Bound on both Euler-Lagrange residuals at exit.
  double tolerance = 1e-7;
  std::size_t max_iterations = 2000;
  /// Relative density threshold for support detection.
  double support_threshold = 1e-3;
  /// Finish with an exact active-set solve of the KKT system.
  bool polish = true;
};

enum class EdgeKind { hard, soft };

struct SupportInterval {
  Interval bounds;
  double mass = 0.0;
  EdgeKind lower = EdgeKind::soft;
  EdgeKind upper = EdgeKind::soft;
  std::size_t first_node = 0;
  std::size_t last_node = 0;
};

struct Residuals {
  /// max over support nodes of |f - V - C|.
  double on_support = 0.0;
  /// max over the other nodes of (f - V - C)_+.
  double off_support = 0.0;
};

struct SupportDetection {
  std::vector<SupportInterval> intervals;
  std::vector<double> filling_fractions;
};

struct EquilibriumSolution {
  DiscreteMeasure measure;
  Domain domain = Domain::interval(0.0, 1.0);
  std::vector<SupportInterval> support;
  /// C_V: median of f - V over the support nodes.
  double robin_constant = 0.0;
  std::vector<double> filling_fractions;
  Residuals residuals;
  /// Energy at beta = 2 (scale linearly for other beta).
  double energy_beta2 = 0.0;
  std::size_t iterations = 0;
  double support_threshold = 1e-3;
  bool polished = false;

  /// Density of the measure at every node.
  std::vector<double> densities() const;
};

/// E[mu] = (beta / 4) iint (V(x) + V(y) - 2 log|x - y|) dmu dmu.
///
/// +inf when mu has a weighted atom or a node carrying at least half the mass.
double energy(const DiscreteMeasure& mu, const Potential& v, double beta);

/// Minimize the energy over the weight simplex on a uniform cell-centred grid.
EquilibriumSolution solve_equilibrium(const Potential& v, const Domain& b, const GridConfig& grid,
                                      const DiscreteMeasure* warm_start = nullptr);

/// Support, C_V, filling fractions, residuals and energy of a given measure.
EquilibriumSolution analyze_measure(DiscreteMeasure mu, const Domain& b, const Potential& v, double threshold);

/// Residuals of the Euler-Lagrange conditions with the solution's C_V.
Residuals euler_lagrange_residual(const EquilibriumSolution& sol, const Potential& v);
/// Same, for an arbitrary measure and constant (support from `threshold`).
Residuals euler_lagrange_residual(const DiscreteMeasure& mu, const Domain& b, const Potential& v,
                                  double constant, double threshold);

/// Runs of nodes with density above threshold * max density.
///
/// Filling fractions give every weighted node to its nearest run, so they sum
/// to one. An endpoint is hard iff its run reaches a domain endpoint; soft
/// endpoints are refined by extrapolating density^2 linearly to zero.
SupportDetection detect_support(const DiscreteMeasure& mu, const Domain& b, double threshold);

/// Number of support intervals found at each threshold.
std::vector<std::size_t> cut_count_sensitivity(const DiscreteMeasure& mu, const Domain& b,
                                               const std::vector<double>& thresholds);

/// min over interior support nodes of
/// S(x) = pi * density(x) * sqrt(|prod_hard (x - a) / prod_soft (x - a)|).
/// Nodes closer than `interior_margin` times the interval length to either end
/// are skipped. A zero density gives S = 0.
double check_edge_regularity(const EquilibriumSolution& sol, double interior_margin = 0.1);

/// S(x) at a single point, using the solution's endpoints and edge classes.
double edge_factor(const EquilibriumSolution& sol, double x, double density);

}  // namespace betagas
