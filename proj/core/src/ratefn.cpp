#include "betagas/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "betagas/errors.hpp"
#include "betagas/kernel.hpp"

namespace betagas {

namespace {

double golden_minimum(const RateFunction& rf, double lo, double hi) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = rf.effective(c), fd = rf.effective(d);
  for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = rf.effective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = rf.effective(d);
    }
  }
  return 0.5 * (a + b);
}

double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RateFunction::RateFunction(std::shared_ptr<const EquilibriumSolution> solution,
                           std::shared_ptr<const Potential> potential)
    : solution_(std::move(solution)), potential_(std::move(potential)) {
  if (!solution_ || !potential_) throw DomainError("rate function needs a solution and a potential");
}

bool RateFunction::on_support(double x) const {
  return std::any_of(solution_->support.begin(), solution_->support.end(),
                     [x](const SupportInterval& s) { return s.bounds.contains(x); });
}

double RateFunction::effective(double x) const {
  return (*potential_)(x) - log_field(solution_->measure, x) + solution_->robin_constant;
}

double RateFunction::operator()(double x) const {
  if (!potential_->domain().contains(x)) throw DomainError("x = " + std::to_string(x) + " is outside B");
  return on_support(x) ? 0.0 : effective(x);
}

double rate_function(const RateFunction& rf, double x) { return rf(x); }

double local_exponent(const RateFunction& rf, double c0, double epsilon) {
  std::vector<double> logt, logj;
  for (double s : {-1.0, 1.0}) {
    std::vector<double> xs, ys;
    for (double frac : {0.125, 0.25, 0.5}) {
      const double t = frac * epsilon;
      const double j = rf.effective(c0 + s * t);
      if (!(j > 0.0)) continue;
      xs.push_back(std::log(t));
      ys.push_back(std::log(j));
    }
    if (xs.size() >= 2) {
      logt.push_back(slope(xs, ys));
    }
  }
  if (logt.empty()) return 0.0;
  double acc = 0.0;
  for (double q : logt) acc += q;
  return acc / static_cast<double>(logt.size());
}

CriticalityReport scan_criticality(const RateFunction& rf, const Neighborhood& a, std::size_t resolution,
                                   const ScanOptions& options) {
  if (resolution < 16) throw DomainError("scan resolution must be at least 16");
  CriticalityReport report;
  report.neighborhood = a;

  const Domain& dom = rf.potential().domain();
  const Interval window = rf.solution().domain.hull();
  const double lo = std::max(dom.lower(), window.lo);
  const double hi = std::min(dom.upper(), window.hi);
  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  report.grid_step = step;

  // Contiguous scan segments of B \ closure(A).
  std::vector<std::vector<std::pair<double, double>>> segments;
  std::vector<std::pair<double, double>> current;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double x = lo + step * static_cast<double>(i);
    if (!dom.contains(x) || in_closed_union(a, x)) {
      if (!current.empty()) segments.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.emplace_back(x, rf(x));
  }
  if (!current.empty()) segments.push_back(std::move(current));
  if (segments.empty()) return report;

  double jmin = kInf, jmax = -kInf;
  for (const auto& seg : segments)
    for (const auto& [x, j] : seg) {
      jmin = std::min(jmin, j);
      jmax = std::max(jmax, j);
    }
  report.min_value = jmin;
  const double range = std::max(jmax - std::min(jmin, 0.0), 1e-300);
  report.tolerance = options.relative_tolerance * range;
  const double plateau_floor = options.plateau_tolerance * range;

  for (const auto& seg : segments) {
    // Plateaus: long runs at numerical zero.
    std::size_t run = 0;
    for (std::size_t k = 0; k <= seg.size(); ++k) {
      if (k < seg.size() && std::abs(seg[k].second) <= plateau_floor) {
        ++run;
        continue;
      }
      if (run >= options.plateau_run) report.degenerate_plateaus.push_back({seg[k - run].first, seg[k - 1].first});
      run = 0;
    }

    for (std::size_t k = 0; k < seg.size(); ++k) {
      const double j = seg[k].second;
      if (!(j < report.tolerance)) continue;
      const bool left_ok = k == 0 || seg[k - 1].second > j;
      const bool right_ok = k + 1 == seg.size() || seg[k + 1].second >= j;
      if (!(left_ok && right_ok)) continue;
      // Minima pinned at the edge of a segment are boundary effects, not critical points.
      if (k == 0 || k + 1 == seg.size()) continue;

      const double c0 = golden_minimum(rf, seg[k - 1].first, seg[k + 1].first);
      CriticalPoint cp;
      cp.location = c0;
      cp.value = rf.effective(c0);
      cp.epsilon = std::min({default_epsilon(a, c0), c0 - dom.lower(), dom.upper() - c0});
      const double h = std::max(cp.epsilon / 8.0, 1e-6);
      cp.curvature = (rf.effective(c0 + h) - 2.0 * rf.effective(c0) + rf.effective(c0 - h)) / (h * h);
      cp.exponent = local_exponent(rf, c0, cp.epsilon);
      cp.beta_threshold = cp.exponent > 0.0 ? 2.0 / cp.exponent : kInf;
      report.points.push_back(cp);
    }
  }
  return report;
}

}  // namespace betagas
