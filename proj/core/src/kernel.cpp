#include "betagas/kernel.hpp"

#include <cmath>

namespace betagas {

namespace {

// Antiderivative of log|u| with H(0) = 0.
double log_antiderivative(double u) noexcept { return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u; }

}  // namespace

double cell_log_average(double x, double lo, double hi) noexcept {
  const double width = hi - lo;
  if (width <= 0.0) return std::log(std::abs(x - lo));
  const double u1 = x - lo;
  const double u2 = x - hi;
  if (u1 >= 0.0 && u2 <= 0.0) return (log_antiderivative(u1) - log_antiderivative(u2)) / width;
  // Outside the cell u1 and u2 share a sign; this form has no cancellation.
  return std::log(std::abs(u1)) + (u2 / width) * std::log1p(width / u2) - 1.0;
}

double cell_inverse_average(double x, double lo, double hi) noexcept {
  const double width = hi - lo;
  if (width <= 0.0) return 1.0 / (x - lo);
  const double u1 = x - lo;
  const double u2 = x - hi;
  if (u1 > 0.0 && u2 < 0.0) return std::log(u1 / -u2) / width;
  return std::log1p(width / u2) / width;
}

double log_field(const DiscreteMeasure& mu, double x) noexcept {
  double acc = 0.0;
  const auto w = mu.weights();
  const auto cells = mu.cells();
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] == 0.0) continue;
    acc += w[j] * cell_log_average(x, cells[j].lo, cells[j].hi);
  }
  return 2.0 * acc;
}

double log_field_derivative(const DiscreteMeasure& mu, double x) noexcept {
  return 2.0 * stieltjes(mu, x);
}

double stieltjes(const DiscreteMeasure& mu, double x) noexcept {
  double acc = 0.0;
  const auto w = mu.weights();
  const auto cells = mu.cells();
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] == 0.0) continue;
    acc += w[j] * cell_inverse_average(x, cells[j].lo, cells[j].hi);
  }
  return acc;
}

Eigen::MatrixXd log_kernel_matrix(std::span<const double> nodes, std::span<const Interval> cells) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      k(i, j) = cell_log_average(nodes[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)].lo,
                                 cells[static_cast<std::size_t>(j)].hi);
  return 0.5 * (k + k.transpose());
}

}  // namespace betagas
