#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "betagas/domain.hpp"
#include "betagas/measure.hpp"

namespace betagas {

/// c_0 + c_1 x + c_2 x^2 + ...
struct PolynomialTerm {
  std::vector<double> coefficients;
};

/// depth * (x - center)^power, power even and >= 2.
struct WellTerm {
  double depth = 0.0;
  double center = 0.0;
  int power = 2;
};

/// 2 * int log|x - y| dmu(y) for a grid measure.
struct LogFieldTerm {
  std::shared_ptr<const DiscreteMeasure> measure;
  /// Where the measure came from (file name); informational.
  std::string source;
};

using Term = std::variant<PolynomialTerm, WellTerm, LogFieldTerm>;

/// Sum of terms plus an explicit additive constant on a closed interval.
struct Piece {
  Interval interval;
  std::vector<Term> terms;
  double constant = 0.0;

  double value(double x) const;
  bool has_log_field() const;
};

/// Continuous piecewise potential V on a domain B.
///
/// Construction checks that the pieces cover B, that adjacent pieces agree at
/// their shared endpoints, and, for unbounded B, that V outgrows 2 log|x| at
/// x = +-1e2, +-1e3.
class Potential {
 public:
  Potential(Domain domain, std::vector<Piece> pieces);
  static Potential polynomial(Domain domain, std::vector<double> coefficients);

  const Domain& domain() const noexcept { return domain_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  /// V(x); DomainError if x is outside the domain.
  double operator()(double x) const;
  /// Index of the first piece whose interval contains x.
  std::size_t piece_index(double x) const;
  /// Largest |V(b-) - V(b+)| over internal piece boundaries.
  double continuity_defect() const;
  /// Endpoints shared by two pieces.
  std::vector<double> breakpoints() const;

 private:
  Domain domain_;
  std::vector<Piece> pieces_;
};

/// V(x), throwing DomainError outside the domain.
double eval_potential(const Potential& p, double x);

/// f(x) = 2 * int log|x - y| dmu(y). Each node spreads its weight over its
/// cell, so f is finite and continuous; at a cell centre the self term equals
/// log(width / 2) - 1. Atoms use the point value log|x - y|.
double log_potential_field(const DiscreteMeasure& mu, double x);

/// First or second derivative. Polynomial and well terms are differentiated
/// exactly; log-field terms by central differences. BoundaryError when x is
/// within the difference step of a piece endpoint.
double potential_derivatives(const Potential& p, double x, int order);

/// Smallest V'' over `samples` points of the interval (convexity audit).
double min_second_derivative(const Potential& p, Interval where, std::size_t samples);

/// Recipe for a potential whose rate function vanishes at one point c0 > A.
///
/// Exactly one of `c0` and `depth` is given; the other follows from the
/// matching condition depth * |a+ - c0|^power = rate function of the base
/// potential at a+, where a+ is the right end of the neighborhood.
struct CriticalPotentialSpec {
  std::shared_ptr<const DiscreteMeasure> base_measure;
  Neighborhood neighborhood;
  std::optional<double> c0;
  std::optional<double> depth;
  int power = 2;
  /// Relative density threshold used to find the support of the base measure.
  double support_threshold = 1e-3;
};

struct CriticalPotential {
  Potential potential;
  double c0 = 0.0;
  double depth = 0.0;
  int power = 2;
  /// Constant C_W of the base potential (median of f - W on the support).
  double base_constant = 0.0;
  /// Rate function of the base potential at the gluing point.
  double matched_value = 0.0;
  double gluing_point = 0.0;
  /// Default radius of the c0 neighbourhood.
  double epsilon = 0.0;
};

/// V = W + C_W left of a+, V = f + depth (x - c0)^power right of it.
CriticalPotential build_critical_potential(const CriticalPotentialSpec& spec, const Potential& base);

/// Half the distance from c0 to the closure of the neighborhood.
double default_epsilon(const Neighborhood& neighborhood, double c0);

/// Effective constant C = median over support nodes of f(x) - V(x).
double median_effective_constant(const DiscreteMeasure& mu, const Potential& v, double threshold);

}  // namespace betagas
