#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "betagas/domain.hpp"

namespace betagas {

/// Nonnegative weights summing to one, attached to an ascending set of nodes.
///
/// Every node owns a cell [cell_lo, cell_hi] that carries its mass uniformly.
/// Atoms are nodes with an empty cell (cell_lo == cell_hi == node); they model
/// genuine point masses and have infinite logarithmic self-energy.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// Weights must sum to one within 1e-9; they are renormalized exactly.
  DiscreteMeasure(std::vector<double> nodes, std::vector<double> weights,
                  std::vector<Interval> cells);

  /// Grid measure with Voronoi cells (midpoints between neighbours; the outer
  /// cells are symmetric about their node).
  static DiscreteMeasure on_grid(std::vector<double> nodes, std::vector<double> weights);
  /// Grid measure with explicit cells.
  static DiscreteMeasure on_cells(std::vector<double> nodes, std::vector<double> weights,
                                  std::vector<Interval> cells);
  /// Sum of point masses.
  static DiscreteMeasure atoms(std::vector<double> nodes, std::vector<double> weights);
  /// Divide `weights` by their (positive) sum before building.
  static DiscreteMeasure normalized(std::vector<double> nodes, std::vector<double> weights,
                                    std::vector<Interval> cells);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const Interval> cells() const noexcept { return cells_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const Interval& cell(std::size_t i) const { return cells_[i]; }
  double width(std::size_t i) const { return cells_[i].length(); }
  bool is_atom(std::size_t i) const { return cells_[i].lo == cells_[i].hi; }
  bool has_atoms() const noexcept;

  /// Weight divided by cell width (infinite for a weighted atom).
  double density(std::size_t i) const;
  /// Total weight of the nodes lying in `iv`.
  double mass_in(const Interval& iv) const noexcept;
  double mean() const noexcept;
  /// Inverse of the cell-wise linear CDF; p in [0, 1].
  double quantile(double p) const;
  /// Smallest interval holding all nodes of positive weight.
  Interval support_hull() const;
  /// Same nodes and cells, new weights (renormalized).
  DiscreteMeasure with_weights(std::vector<double> weights) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<Interval> cells_;
};

/// Indices of nodes whose density is at least `threshold` times the maximum.
std::vector<std::size_t> support_nodes(const DiscreteMeasure& mu, double threshold);

/// Cell-centred uniform grid on a bounded domain: `n` nodes shared between the
/// intervals in proportion to their lengths (at least two per interval).
struct Grid {
  std::vector<double> nodes;
  std::vector<Interval> cells;
};
Grid make_uniform_grid(const Domain& domain, std::size_t n);

}  // namespace betagas
