#include "betagas/domain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "betagas/errors.hpp"

namespace betagas {

Domain::Domain(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw DomainError("domain needs at least one interval");
  for (std::size_t h = 0; h < intervals_.size(); ++h) {
    const auto& iv = intervals_[h];
    if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi)
      throw DomainError("domain interval " + std::to_string(h) + " has lo > hi");
    if (h > 0 && !(intervals_[h - 1].hi < iv.lo))
      throw DomainError("domain intervals must be disjoint and sorted ascending");
  }
}

bool Domain::contains(double x) const noexcept { return locate(x).has_value(); }

std::optional<std::size_t> Domain::locate(double x) const noexcept {
  for (std::size_t h = 0; h < intervals_.size(); ++h)
    if (intervals_[h].contains(x)) return h;
  return std::nullopt;
}

bool Domain::bounded() const noexcept {
  return std::isfinite(intervals_.front().lo) && std::isfinite(intervals_.back().hi);
}

double Domain::length() const noexcept {
  double total = 0.0;
  for (const auto& iv : intervals_) total += iv.length();
  return total;
}

bool Domain::is_endpoint(double x, double tol) const noexcept {
  return std::any_of(intervals_.begin(), intervals_.end(), [&](const Interval& iv) {
    return std::abs(x - iv.lo) <= tol || std::abs(x - iv.hi) <= tol;
  });
}

Domain Domain::clipped(Interval window) const {
  std::vector<Interval> out;
  for (const auto& iv : intervals_) {
    const double lo = std::max(iv.lo, window.lo);
    const double hi = std::min(iv.hi, window.hi);
    if (lo < hi) out.push_back({lo, hi});
  }
  if (out.empty()) throw DomainError("window does not intersect the domain");
  return Domain(std::move(out));
}

bool in_open_union(const Neighborhood& set, double x) noexcept {
  return std::any_of(set.begin(), set.end(),
                     [x](const Interval& iv) { return iv.contains_open(x); });
}

bool in_closed_union(const Neighborhood& set, double x) noexcept {
  return std::any_of(set.begin(), set.end(), [x](const Interval& iv) { return iv.contains(x); });
}

double distance_to(const Neighborhood& set, double x) noexcept {
  double best = kInf;
  for (const auto& iv : set) {
    const double d = x < iv.lo ? iv.lo - x : (x > iv.hi ? x - iv.hi : 0.0);
    best = std::min(best, d);
  }
  return best;
}

}  // namespace betagas
