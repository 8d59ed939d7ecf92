#include "betagas/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "betagas/errors.hpp"

namespace betagas {

DiscreteMeasure::DiscreteMeasure(std::vector<double> nodes, std::vector<double> weights,
                                 std::vector<Interval> cells)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), cells_(std::move(cells)) {
  if (nodes_.empty()) throw DomainError("measure needs at least one node");
  if (weights_.size() != nodes_.size() || cells_.size() != nodes_.size())
    throw DomainError("measure nodes, weights and cells differ in length");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw DomainError("measure node is not finite");
    if (i > 0 && !(nodes_[i - 1] < nodes_[i])) throw DomainError("measure nodes must ascend strictly");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
      throw DomainError("measure weight " + std::to_string(i) + " is negative or not finite");
    if (!(cells_[i].lo <= nodes_[i] && nodes_[i] <= cells_[i].hi))
      throw DomainError("measure node lies outside its cell");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("measure weights sum to " + std::to_string(total) + ", not 1");
  for (auto& w : weights_) w /= total;
}

DiscreteMeasure DiscreteMeasure::on_grid(std::vector<double> nodes, std::vector<double> weights) {
  const std::size_t n = nodes.size();
  std::vector<Interval> cells(n);
  if (n == 1) {
    cells[0] = {nodes[0], nodes[0]};
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? 0.5 * (nodes[i - 1] + nodes[i]) : nodes[0] - 0.5 * (nodes[1] - nodes[0]);
      const double right =
          i + 1 < n ? 0.5 * (nodes[i] + nodes[i + 1]) : nodes[n - 1] + 0.5 * (nodes[n - 1] - nodes[n - 2]);
      cells[i] = {left, right};
    }
  }
  return DiscreteMeasure(std::move(nodes), std::move(weights), std::move(cells));
}

DiscreteMeasure DiscreteMeasure::on_cells(std::vector<double> nodes, std::vector<double> weights,
                                          std::vector<Interval> cells) {
  return DiscreteMeasure(std::move(nodes), std::move(weights), std::move(cells));
}

DiscreteMeasure DiscreteMeasure::atoms(std::vector<double> nodes, std::vector<double> weights) {
  std::vector<Interval> cells;
  cells.reserve(nodes.size());
  for (double x : nodes) cells.push_back({x, x});
  return DiscreteMeasure(std::move(nodes), std::move(weights), std::move(cells));
}

DiscreteMeasure DiscreteMeasure::normalized(std::vector<double> nodes, std::vector<double> weights,
                                            std::vector<Interval> cells) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("cannot normalize a measure of zero mass");
  for (auto& w : weights) w /= total;
  return DiscreteMeasure(std::move(nodes), std::move(weights), std::move(cells));
}

bool DiscreteMeasure::has_atoms() const noexcept {
  for (std::size_t i = 0; i < size(); ++i)
    if (is_atom(i)) return true;
  return false;
}

double DiscreteMeasure::density(std::size_t i) const {
  const double w = width(i);
  if (w == 0.0) return weights_[i] > 0.0 ? kInf : 0.0;
  return weights_[i] / w;
}

double DiscreteMeasure::mass_in(const Interval& iv) const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    if (iv.contains(nodes_[i])) m += weights_[i];
  return m;
}

double DiscreteMeasure::mean() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * nodes_[i];
  return m;
}

double DiscreteMeasure::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = weights_[i];
    if (w > 0.0 && acc + w >= p) {
      const double t = std::clamp((p - acc) / w, 0.0, 1.0);
      return cells_[i].lo + t * cells_[i].length();
    }
    acc += w;
  }
  for (std::size_t i = size(); i-- > 0;)
    if (weights_[i] > 0.0) return cells_[i].hi;
  return cells_.back().hi;
}

Interval DiscreteMeasure::support_hull() const {
  std::size_t first = size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (weights_[i] > 0.0) {
      first = std::min(first, i);
      last = i;
    }
  }
  return {cells_[first].lo, cells_[last].hi};
}

DiscreteMeasure DiscreteMeasure::with_weights(std::vector<double> weights) const {
  return normalized(nodes_, std::move(weights), cells_);
}

std::vector<std::size_t> support_nodes(const DiscreteMeasure& mu, double threshold) {
  double peak = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) peak = std::max(peak, mu.density(i));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.weight(i) > 0.0 && mu.density(i) >= threshold * peak) out.push_back(i);
  return out;
}

Grid make_uniform_grid(const Domain& domain, std::size_t n) {
  if (!domain.bounded()) throw DomainError("uniform grid needs a bounded domain");
  const auto& ivs = domain.intervals();
  if (n < 2 * ivs.size()) throw DomainError("too few grid nodes for the domain");
  const double total = domain.length();
  Grid grid;
  std::size_t assigned = 0;
  for (std::size_t h = 0; h < ivs.size(); ++h) {
    std::size_t count = h + 1 == ivs.size()
                            ? n - assigned
                            : static_cast<std::size_t>(std::llround(static_cast<double>(n) * ivs[h].length() / total));
    count = std::max<std::size_t>(count, 2);
    assigned += count;
    const double step = ivs[h].length() / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double lo = ivs[h].lo + step * static_cast<double>(i);
      const double hi = i + 1 == count ? ivs[h].hi : ivs[h].lo + step * static_cast<double>(i + 1);
      grid.nodes.push_back(0.5 * (lo + hi));
      grid.cells.push_back({lo, hi});
    }
  }
  return grid;
}

}  // namespace betagas
