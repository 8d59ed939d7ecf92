#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace betagas {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi]; endpoints may be infinite.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool contains_open(double x) const noexcept { return x > lo && x < hi; }
  double length() const noexcept { return hi - lo; }
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
  bool bounded() const noexcept { return lo > -kInf && hi < kInf; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of disjoint closed intervals, sorted ascending.
class Domain {
 public:
  explicit Domain(std::vector<Interval> intervals);
  static Domain real_line() { return Domain({{-kInf, kInf}}); }
  static Domain interval(double lo, double hi) { return Domain({{lo, hi}}); }

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  bool contains(double x) const noexcept;
  std::optional<std::size_t> locate(double x) const noexcept;
  double lower() const noexcept { return intervals_.front().lo; }
  double upper() const noexcept { return intervals_.back().hi; }
  bool bounded() const noexcept;
  Interval hull() const noexcept { return {lower(), upper()}; }
  /// Total Lebesgue measure (infinite for unbounded domains).
  double length() const noexcept;
  /// Is `x` an endpoint of one of the intervals (within `tol`)?
  bool is_endpoint(double x, double tol) const noexcept;
  /// Restrict to a window; throws DomainError if the result is empty.
  Domain clipped(Interval window) const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  std::vector<Interval> intervals_;
};

/// Union of open intervals used as the neighborhood A of the support.
using Neighborhood = std::vector<Interval>;

/// True iff x lies in the open set.
bool in_open_union(const Neighborhood& set, double x) noexcept;
/// True iff x lies in the closure of the set.
bool in_closed_union(const Neighborhood& set, double x) noexcept;
/// Distance from x to the closure of the set.
double distance_to(const Neighborhood& set, double x) noexcept;

}  // namespace betagas
