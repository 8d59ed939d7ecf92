#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "betagas/equilibrium.hpp"
#include "betagas/potential.hpp"

namespace betagas {

/// J~(x) = V(x) - 2 int log|x - y| dmu_eq(y) + C_V off the support, 0 on it.
class RateFunction {
 public:
  RateFunction(std::shared_ptr<const EquilibriumSolution> solution, std::shared_ptr<const Potential> potential);

  /// J~(x); DomainError outside the potential's domain.
  double operator()(double x) const;
  /// V - f + C_V without the zero override on the support.
  double effective(double x) const;
  bool on_support(double x) const;

  const EquilibriumSolution& solution() const noexcept { return *solution_; }
  const Potential& potential() const noexcept { return *potential_; }

 private:
  std::shared_ptr<const EquilibriumSolution> solution_;
  std::shared_ptr<const Potential> potential_;
};

double rate_function(const RateFunction& rf, double x);

struct CriticalPoint {
  double location = 0.0;
  double value = 0.0;
  /// J~'' by central differences.
  double curvature = 0.0;
  /// Local exponent q of J~ ~ |x - c0|^q.
  double exponent = 0.0;
  /// 2 / q.
  double beta_threshold = 0.0;
  /// Radius used for the exponent fit.
  double epsilon = 0.0;
};

struct CriticalityReport {
  std::vector<CriticalPoint> points;
  Neighborhood neighborhood;
  double tolerance = 0.0;
  double grid_step = 0.0;
  /// Runs of scan nodes where J~ vanishes to numerical precision.
  std::vector<Interval> degenerate_plateaus;
  /// Smallest J~ seen on the scan grid.
  double min_value = 0.0;
};

struct ScanOptions {
  /// Critical-value tolerance relative to the range of J~ on the scan grid.
  double relative_tolerance = 1e-4;
  /// Plateau floor relative to the range.
  double plateau_tolerance = 1e-12;
  /// Plateaus need at least this many consecutive nodes.
  std::size_t plateau_run = 3;
};

/// Local minima of J~ on B minus closure(A) with value below tolerance.
///
/// Each minimum is refined by golden-section search, its curvature taken by
/// central differences, and q fitted on log J~(c0 +- t) against log t for the
/// dyadic offsets t = eps/8, eps/4, eps/2 (both sides averaged).
CriticalityReport scan_criticality(const RateFunction& rf, const Neighborhood& a, std::size_t resolution,
                                   const ScanOptions& options = {});

/// Least-squares slope of log J~(c0 + s t) against log t, s = +-1 averaged.
double local_exponent(const RateFunction& rf, double c0, double epsilon);

}  // namespace betagas
