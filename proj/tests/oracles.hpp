#pragma once

// Closed forms used as independent references by the tests.

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "betagas/equilibrium.hpp"
#include "betagas/measure.hpp"
#include "betagas/potential.hpp"

namespace oracle {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kPi = std::numbers::pi;

// Semicircle for V = x^2: density sqrt(2 - x^2) / pi on [-sqrt 2, sqrt 2].
inline double semicircle_density(double x) { return std::abs(x) < kSqrt2 ? std::sqrt(2.0 - x * x) / kPi : 0.0; }

inline double semicircle_cdf(double x) {
  if (x <= -kSqrt2) return 0.0;
  if (x >= kSqrt2) return 1.0;
  return 0.5 + (0.5 * x * std::sqrt(2.0 - x * x) + std::asin(x / kSqrt2)) / kPi;
}

// Arcsine law on [-1, 1].
inline double arcsine_density(double x) { return 1.0 / (kPi * std::sqrt(1.0 - x * x)); }
inline double arcsine_cdf(double x) { return 0.5 + std::asin(std::clamp(x, -1.0, 1.0)) / kPi; }

// Robin constants: f - V on the support.
inline const double kSemicircleConstant = -(1.0 + std::log(2.0));
inline const double kArcsineConstant = -2.0 * std::log(2.0);

// Effective potential of V = x^2 to the right of the soft edge:
// integral of 2 sqrt(t^2 - 2) from sqrt 2 to x.
inline double semicircle_rate(double x) {
  const double x2 = std::abs(x);
  if (x2 <= kSqrt2) return 0.0;
  const double r = std::sqrt(x2 * x2 - 2.0);
  return x2 * r - 2.0 * std::log((x2 + r) / kSqrt2);
}

// Stieltjes transform of the semicircle for x > sqrt 2.
inline double semicircle_stieltjes(double x) { return x - std::sqrt(x * x - 2.0); }

// Grid measure on the uniform cell-centred grid of [lo, hi] whose cell masses
// are exact increments of `cdf`.
template <typename Cdf>
betagas::DiscreteMeasure exact_cell_measure(double lo, double hi, std::size_t n, Cdf cdf) {
  const auto grid = betagas::make_uniform_grid(betagas::Domain::interval(lo, hi), n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = cdf(grid.cells[i].hi) - cdf(grid.cells[i].lo);
  return betagas::DiscreteMeasure::normalized(grid.nodes, w, grid.cells);
}

inline betagas::DiscreteMeasure semicircle_measure(std::size_t n, double lo = -3.0, double hi = 3.0) {
  return exact_cell_measure(lo, hi, n, semicircle_cdf);
}

inline betagas::DiscreteMeasure arcsine_measure(std::size_t n) { return exact_cell_measure(-1.0, 1.0, n, arcsine_cdf); }

}  // namespace oracle
