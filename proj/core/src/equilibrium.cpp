#include "betagas/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "betagas/errors.hpp"
#include "betagas/kernel.hpp"

namespace betagas {

namespace {

using Eigen::VectorXd;

void project_to_simplex(VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  v = (v.array() - theta).max(0.0).matrix();
}

struct Problem {
  VectorXd potential;
  Eigen::MatrixXd kernel;

  // F(w) = V.w - w'Kw; the energy is (beta / 2) F.
  double objective(const VectorXd& w, const VectorXd& kw) const { return potential.dot(w) - w.dot(kw); }
};

// Exact minimizer on a guessed active set, refined by primal-dual swaps.
bool polish(const Problem& pb, VectorXd& w, double tol) {
  const auto n = w.size();
  std::vector<char> active(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = w(i) > 0.0;
  for (int round = 0; round < 100; ++round) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)]) idx.push_back(i);
    const auto m = static_cast<Eigen::Index>(idx.size());
    if (m == 0) return false;
    Eigen::MatrixXd sys(m + 1, m + 1);
    VectorXd rhs(m + 1);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) sys(a, b) = 2.0 * pb.kernel(idx[a], idx[b]);
      sys(a, m) = 1.0;
      sys(m, a) = 1.0;
      rhs(a) = pb.potential(idx[a]);
    }
    sys(m, m) = 0.0;
    rhs(m) = 1.0;
    const VectorXd sol = sys.partialPivLu().solve(rhs);
    const double lambda = sol(m);

    bool changed = false;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (sol(a) < 0.0) {
        active[static_cast<std::size_t>(idx[a])] = 0;
        changed = true;
      }
    }
    if (changed) continue;

    VectorXd candidate = VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) candidate(idx[a]) = sol(a);
    const VectorXd grad = pb.potential - 2.0 * (pb.kernel * candidate);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)] && grad(i) < lambda - tol) {
        active[static_cast<std::size_t>(i)] = 1;
        changed = true;
      }
    }
    if (changed) continue;
    w = candidate;
    return true;
  }
  return false;
}

std::size_t fista(const Problem& pb, VectorXd& w, std::size_t max_iterations, double tol) {
  VectorXd kw = pb.kernel * w;
  double fw = pb.objective(w, kw);

  // Curvature of -2K on the zero-sum subspace bounds the step.
  VectorXd probe = VectorXd::LinSpaced(w.size(), -1.0, 1.0);
  probe.array() -= probe.mean();
  double lipschitz = 1.0;
  for (int k = 0; k < 30; ++k) {
    VectorXd next = -2.0 * (pb.kernel * probe);
    next.array() -= next.mean();
    lipschitz = next.norm() / std::max(probe.norm(), 1e-300);
    probe = next / std::max(next.norm(), 1e-300);
  }
  lipschitz = std::max(lipschitz, 1e-12);

  VectorXd y = w;
  VectorXd ky = kw;
  double t = 1.0;
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    const VectorXd grad = pb.potential - 2.0 * ky;
    const double fy = pb.objective(y, ky);
    VectorXd z, kz;
    double fz = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      z = y - grad / lipschitz;
      project_to_simplex(z);
      kz = pb.kernel * z;
      fz = pb.objective(z, kz);
      const VectorXd d = z - y;
      if (fz <= fy + grad.dot(d) + 0.5 * lipschitz * d.squaredNorm() + 1e-14 * std::abs(fy)) break;
      lipschitz *= 2.0;
    }
    const double step_norm = lipschitz * (z - y).norm();
    if (fz > fw) {
      // Adaptive restart: drop the momentum and retry from the last iterate.
      y = w;
      ky = kw;
      t = 1.0;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    y = z + momentum * (z - w);
    ky = kz + momentum * (kz - kw);
    w = std::move(z);
    kw = std::move(kz);
    fw = fz;
    t = t_next;
    if (step_norm < tol) break;
  }
  return it;
}

double median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(values.begin(), mid));
}

bool in_support(const std::vector<SupportInterval>& support, std::size_t i) {
  return std::any_of(support.begin(), support.end(),
                     [i](const SupportInterval& s) { return i >= s.first_node && i <= s.last_node; });
}

// Soft edge where density^2 extrapolates linearly to zero from the two nodes
// just inside the edge; kept within one cell of the outermost support cell.
double refine_soft_edge(const DiscreteMeasure& mu, std::size_t edge, std::size_t inner, bool upper) {
  const double x1 = mu.node(edge);
  const double x2 = mu.node(inner);
  const double r1 = mu.density(edge) * mu.density(edge);
  const double r2 = mu.density(inner) * mu.density(inner);
  const Interval cell = mu.cell(edge);
  const double fallback = upper ? cell.hi : cell.lo;
  if (!(r2 > r1)) return fallback;
  const double root = x1 - r1 * (x2 - x1) / (r2 - r1);
  const double width = cell.length();
  return upper ? std::clamp(root, cell.lo, cell.hi + width) : std::clamp(root, cell.lo - width, cell.hi);
}

}  // namespace

std::vector<double> EquilibriumSolution::densities() const {
  std::vector<double> out(measure.size());
  for (std::size_t i = 0; i < measure.size(); ++i) out[i] = measure.density(i);
  return out;
}

double energy(const DiscreteMeasure& mu, const Potential& v, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!v.domain().contains(mu.node(i)))
      throw DomainError("measure node " + std::to_string(mu.node(i)) + " outside the potential's domain");
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) >= 0.5) return kInf;
    if (mu.weight(i) > 0.0 && mu.is_atom(i)) return kInf;
  }
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double wi = mu.weight(i);
    if (wi == 0.0) continue;
    linear += wi * v(mu.node(i));
    double row = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double wj = mu.weight(j);
      if (wj == 0.0) continue;
      // Symmetric part of the collocation kernel.
      row += wj * 0.5 * (cell_log_average(mu.node(i), mu.cell(j).lo, mu.cell(j).hi) +
                         cell_log_average(mu.node(j), mu.cell(i).lo, mu.cell(i).hi));
    }
    quadratic += wi * row;
  }
  return 0.25 * beta * (2.0 * linear - 2.0 * quadratic);
}

SupportDetection detect_support(const DiscreteMeasure& mu, const Domain& b, double threshold) {
  const auto nodes = support_nodes(mu, threshold);
  if (nodes.empty()) throw ThresholdError("no node reaches the support threshold");

  SupportDetection out;
  std::size_t start = nodes.front();
  auto close_run = [&](std::size_t first, std::size_t last) {
    SupportInterval s;
    s.first_node = first;
    s.last_node = last;
    const double tol = 1e-9 * std::max(1.0, std::abs(mu.cell(first).lo));
    s.lower = b.is_endpoint(mu.cell(first).lo, tol) ? EdgeKind::hard : EdgeKind::soft;
    s.upper = b.is_endpoint(mu.cell(last).hi, 1e-9 * std::max(1.0, std::abs(mu.cell(last).hi)))
                  ? EdgeKind::hard
                  : EdgeKind::soft;
    s.bounds.lo = s.lower == EdgeKind::hard || last - first < 3
                      ? mu.cell(first).lo
                      : refine_soft_edge(mu, first + 1, first + 2, false);
    s.bounds.hi = s.upper == EdgeKind::hard || last - first < 3
                      ? mu.cell(last).hi
                      : refine_soft_edge(mu, last - 1, last - 2, true);
    out.intervals.push_back(s);
  };
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const bool adjacent = nodes[k] == nodes[k - 1] + 1 && mu.cell(nodes[k - 1]).hi == mu.cell(nodes[k]).lo;
    if (!adjacent) {
      close_run(start, nodes[k - 1]);
      start = nodes[k];
    }
  }
  close_run(start, nodes.back());

  out.filling_fractions.assign(out.intervals.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) == 0.0) continue;
    std::size_t best = 0;
    double best_dist = kInf;
    for (std::size_t h = 0; h < out.intervals.size(); ++h) {
      const auto& s = out.intervals[h];
      const double d = i < s.first_node ? mu.node(s.first_node) - mu.node(i)
                                        : (i > s.last_node ? mu.node(i) - mu.node(s.last_node) : 0.0);
      if (d < best_dist) {
        best_dist = d;
        best = h;
      }
    }
    out.filling_fractions[best] += mu.weight(i);
  }
  for (std::size_t h = 0; h < out.intervals.size(); ++h) out.intervals[h].mass = out.filling_fractions[h];
  return out;
}

std::vector<std::size_t> cut_count_sensitivity(const DiscreteMeasure& mu, const Domain& b,
                                               const std::vector<double>& thresholds) {
  std::vector<std::size_t> out;
  for (double t : thresholds) {
    try {
      out.push_back(detect_support(mu, b, t).intervals.size());
    } catch (const ThresholdError&) {
      out.push_back(0);
    }
  }
  return out;
}

Residuals euler_lagrange_residual(const DiscreteMeasure& mu, const Domain& b, const Potential& v,
                                  double constant, double threshold) {
  const auto support = detect_support(mu, b, threshold).intervals;
  Residuals r;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double gap = log_field(mu, mu.node(i)) - v(mu.node(i)) - constant;
    if (in_support(support, i)) {
      r.on_support = std::max(r.on_support, std::abs(gap));
    } else {
      r.off_support = std::max(r.off_support, gap);
    }
  }
  return r;
}

Residuals euler_lagrange_residual(const EquilibriumSolution& sol, const Potential& v) {
  Residuals r;
  const auto& mu = sol.measure;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double gap = log_field(mu, mu.node(i)) - v(mu.node(i)) - sol.robin_constant;
    if (in_support(sol.support, i)) {
      r.on_support = std::max(r.on_support, std::abs(gap));
    } else {
      r.off_support = std::max(r.off_support, gap);
    }
  }
  return r;
}

EquilibriumSolution analyze_measure(DiscreteMeasure mu, const Domain& b, const Potential& v, double threshold) {
  EquilibriumSolution sol;
  sol.measure = std::move(mu);
  sol.domain = b;
  sol.support_threshold = threshold;
  auto detection = detect_support(sol.measure, b, threshold);
  sol.support = std::move(detection.intervals);
  sol.filling_fractions = std::move(detection.filling_fractions);

  std::vector<double> gaps;
  for (const auto& s : sol.support)
    for (std::size_t i = s.first_node; i <= s.last_node; ++i)
      gaps.push_back(log_field(sol.measure, sol.measure.node(i)) - v(sol.measure.node(i)));
  sol.robin_constant = median(std::move(gaps));
  sol.residuals = euler_lagrange_residual(sol, v);
  sol.energy_beta2 = energy(sol.measure, v, 2.0);
  return sol;
}

EquilibriumSolution solve_equilibrium(const Potential& v, const Domain& b, const GridConfig& grid,
                                      const DiscreteMeasure* warm_start) {
  if (grid.nodes < 64) throw DomainError("equilibrium grid needs at least 64 nodes");
  Domain dom = grid.window ? b.clipped(*grid.window) : b;
  if (!dom.bounded()) throw DomainError("unbounded domain: give a truncation window");
  const Grid g = make_uniform_grid(dom, grid.nodes);
  const auto n = static_cast<Eigen::Index>(g.nodes.size());

  Problem pb;
  pb.potential.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) pb.potential(i) = v(g.nodes[static_cast<std::size_t>(i)]);
  pb.kernel = log_kernel_matrix(g.nodes, g.cells);

  VectorXd w = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (warm_start) {
    if (warm_start->size() != g.nodes.size())
      throw DomainError("warm start lives on a different grid");
    for (Eigen::Index i = 0; i < n; ++i) w(i) = warm_start->weight(static_cast<std::size_t>(i));
  }

  EquilibriumSolution sol;
  sol.iterations = fista(pb, w, grid.max_iterations, 1e-10);
  if (grid.polish) {
    VectorXd polished = w;
    if (polish(pb, polished, 1e-12)) {
      const VectorXd kp = pb.kernel * polished;
      const VectorXd kw = pb.kernel * w;
      if (pb.objective(polished, kp) <= pb.objective(w, kw) + 1e-13) {
        w = polished;
        sol.polished = true;
      }
    }
  }

  std::vector<double> weights(w.data(), w.data() + w.size());
  for (auto& x : weights) x = std::max(x, 0.0);
  const std::size_t iterations = sol.iterations;
  const bool polished = sol.polished;
  sol = analyze_measure(DiscreteMeasure::normalized(g.nodes, std::move(weights), g.cells), dom, v,
                        grid.support_threshold);
  sol.iterations = iterations;
  sol.polished = polished;

  if (sol.residuals.on_support > grid.tolerance || sol.residuals.off_support > grid.tolerance)
    throw ConvergenceError("equilibrium solver did not reach tolerance " + std::to_string(grid.tolerance) +
                               " (on-support " + std::to_string(sol.residuals.on_support) +
                               ", off-support " + std::to_string(sol.residuals.off_support) + ")",
                           sol.residuals.on_support, sol.residuals.off_support);
  return sol;
}

double edge_factor(const EquilibriumSolution& sol, double x, double density) {
  double ratio = 1.0;
  for (const auto& s : sol.support) {
    for (auto [a, kind] : {std::pair{s.bounds.lo, s.lower}, std::pair{s.bounds.hi, s.upper}}) {
      if (kind == EdgeKind::hard) ratio *= (x - a);
      else ratio /= (x - a);
    }
  }
  return std::numbers::pi * density * std::sqrt(std::abs(ratio));
}

double check_edge_regularity(const EquilibriumSolution& sol, double interior_margin) {
  if (sol.support.empty()) throw InconsistencyError("solution has no support intervals");
  double worst = kInf;
  for (const auto& s : sol.support) {
    const double margin = interior_margin * s.bounds.length();
    bool any_positive = false;
    for (std::size_t i = s.first_node; i <= s.last_node; ++i) {
      const double x = sol.measure.node(i);
      const double rho = sol.measure.density(i);
      if (rho > 0.0) any_positive = true;
      if (x - s.bounds.lo < margin || s.bounds.hi - x < margin) continue;
      worst = std::min(worst, edge_factor(sol, x, rho));
    }
    if (!any_positive) throw InconsistencyError("claimed support interval carries no density");
  }
  return worst;
}

}  // namespace betagas
