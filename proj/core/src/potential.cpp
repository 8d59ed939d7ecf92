#include "betagas/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "betagas/errors.hpp"
#include "betagas/kernel.hpp"

namespace betagas {

namespace {

double term_value(const Term& term, double x) {
  return std::visit(
      [x](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, PolynomialTerm>) {
          double acc = 0.0;
          for (auto it = t.coefficients.rbegin(); it != t.coefficients.rend(); ++it) acc = acc * x + *it;
          return acc;
        } else if constexpr (std::is_same_v<T, WellTerm>) {
          return t.depth * std::pow(x - t.center, t.power);
        } else {
          return log_field(*t.measure, x);
        }
      },
      term);
}

// Exact derivative for polynomial and well terms; nullopt for log fields.
std::optional<double> term_derivative(const Term& term, double x, int order) {
  if (const auto* poly = std::get_if<PolynomialTerm>(&term)) {
    const auto& c = poly->coefficients;
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > static_cast<std::size_t>(order);) {
      double factor = 1.0;
      for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - static_cast<std::size_t>(j));
      acc = acc * x + factor * c[k];
    }
    return acc;
  }
  if (const auto* well = std::get_if<WellTerm>(&term)) {
    const int p = well->power;
    if (p < order) return 0.0;
    double factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= p - j;
    return well->depth * factor * std::pow(x - well->center, p - order);
  }
  return std::nullopt;
}

double scale_of(double x) { return std::max(1.0, std::abs(x)); }

}  // namespace

double Piece::value(double x) const {
  double acc = constant;
  for (const auto& t : terms) acc += term_value(t, x);
  return acc;
}

bool Piece::has_log_field() const {
  return std::any_of(terms.begin(), terms.end(),
                     [](const Term& t) { return std::holds_alternative<LogFieldTerm>(t); });
}

Potential::Potential(Domain domain, std::vector<Piece> pieces)
    : domain_(std::move(domain)), pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw DomainError("potential needs at least one piece");
  std::sort(pieces_.begin(), pieces_.end(),
            [](const Piece& a, const Piece& b) { return a.interval.lo < b.interval.lo; });
  for (const auto& piece : pieces_) {
    if (!(piece.interval.lo <= piece.interval.hi)) throw DomainError("piece interval has lo > hi");
    for (const auto& t : piece.terms) {
      if (const auto* lf = std::get_if<LogFieldTerm>(&t); lf && !lf->measure)
        throw DomainError("log-field term without a measure");
      if (const auto* w = std::get_if<WellTerm>(&t); w && (w->power < 2 || w->power % 2 != 0))
        throw DomainError("well power must be even and >= 2");
    }
  }
  // Coverage: every domain interval is a chain of touching pieces.
  for (const auto& iv : domain_.intervals()) {
    double reached = iv.lo;
    bool started = false;
    for (const auto& piece : pieces_) {
      if (piece.interval.hi < reached || piece.interval.lo > iv.hi) continue;
      if (piece.interval.lo > reached) break;
      started = true;
      reached = std::max(reached, piece.interval.hi);
      if (reached >= iv.hi) break;
    }
    if (!started || reached < iv.hi)
      throw DomainError("potential pieces do not cover [" + std::to_string(iv.lo) + ", " +
                        std::to_string(iv.hi) + "]");
  }
  for (double b : breakpoints()) {
    double left = 0.0, right = 0.0;
    bool have_left = false, have_right = false;
    for (const auto& piece : pieces_) {
      if (piece.interval.hi == b && !have_left) {
        left = piece.value(b);
        have_left = true;
      }
      if (piece.interval.lo == b && !have_right) {
        right = piece.value(b);
        have_right = true;
      }
    }
    if (std::abs(left - right) > 1e-9 * std::max(1.0, std::abs(left)))
      throw DomainError("potential is discontinuous at x = " + std::to_string(b));
  }
  for (double r : {1e2, 1e3}) {
    for (double x : {-r, r}) {
      const auto h = domain_.locate(x);
      if (!h || domain_.intervals()[*h].bounded()) continue;
      if (!(operator()(x) / (2.0 * std::log(std::abs(x))) > 1.0))
        throw DomainError("potential does not outgrow 2 log|x| at x = " + std::to_string(x));
    }
  }
}

Potential Potential::polynomial(Domain domain, std::vector<double> coefficients) {
  std::vector<Piece> pieces;
  for (const auto& iv : domain.intervals()) pieces.push_back({iv, {PolynomialTerm{coefficients}}, 0.0});
  return Potential(std::move(domain), std::move(pieces));
}

std::size_t Potential::piece_index(double x) const {
  if (!domain_.contains(x)) throw DomainError("x = " + std::to_string(x) + " is outside the domain");
  for (std::size_t k = 0; k < pieces_.size(); ++k)
    if (pieces_[k].interval.contains(x)) return k;
  throw DomainError("no piece covers x = " + std::to_string(x));
}

double Potential::operator()(double x) const { return pieces_[piece_index(x)].value(x); }

std::vector<double> Potential::breakpoints() const {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < pieces_.size(); ++k)
    for (std::size_t j = k + 1; j < pieces_.size(); ++j)
      if (pieces_[k].interval.hi == pieces_[j].interval.lo) out.push_back(pieces_[k].interval.hi);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Potential::continuity_defect() const {
  double worst = 0.0;
  for (double b : breakpoints()) {
    for (std::size_t k = 0; k < pieces_.size(); ++k)
      for (std::size_t j = 0; j < pieces_.size(); ++j)
        if (pieces_[k].interval.hi == b && pieces_[j].interval.lo == b)
          worst = std::max(worst, std::abs(pieces_[k].value(b) - pieces_[j].value(b)));
  }
  return worst;
}

double eval_potential(const Potential& p, double x) { return p(x); }

double log_potential_field(const DiscreteMeasure& mu, double x) { return log_field(mu, x); }

double potential_derivatives(const Potential& p, double x, int order) {
  if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
  const auto& piece = p.pieces()[p.piece_index(x)];
  // Second differences need a larger step to keep roundoff below truncation.
  const double h = (order == 1 ? 1e-5 : 1e-4) * scale_of(x);
  if (x - piece.interval.lo <= h || piece.interval.hi - x <= h)
    throw BoundaryError("derivative requested at a piece boundary (x = " + std::to_string(x) + ")");
  double acc = 0.0;
  for (const auto& t : piece.terms) {
    if (auto exact = term_derivative(t, x, order)) {
      acc += *exact;
      continue;
    }
    if (order == 1) {
      acc += (term_value(t, x + h) - term_value(t, x - h)) / (2.0 * h);
    } else {
      acc += (term_value(t, x + h) - 2.0 * term_value(t, x) + term_value(t, x - h)) / (h * h);
    }
  }
  return acc;
}

double min_second_derivative(const Potential& p, Interval where, std::size_t samples) {
  if (samples < 2) throw DomainError("convexity audit needs at least two samples");
  double worst = kInf;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = where.lo + where.length() * (static_cast<double>(i) + 0.5) / static_cast<double>(samples);
    worst = std::min(worst, potential_derivatives(p, x, 2));
  }
  return worst;
}

double default_epsilon(const Neighborhood& neighborhood, double c0) {
  return 0.5 * distance_to(neighborhood, c0);
}

double median_effective_constant(const DiscreteMeasure& mu, const Potential& v, double threshold) {
  const auto idx = support_nodes(mu, threshold);
  if (idx.empty()) throw ThresholdError("measure has no support nodes at the given threshold");
  std::vector<double> values;
  values.reserve(idx.size());
  for (auto i : idx) values.push_back(log_field(mu, mu.node(i)) - v(mu.node(i)));
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

CriticalPotential build_critical_potential(const CriticalPotentialSpec& spec, const Potential& base) {
  if (!spec.base_measure) throw InvalidSpecError("critical potential needs a base measure");
  if (spec.neighborhood.empty()) throw InvalidSpecError("neighborhood A is empty");
  if (spec.c0.has_value() == spec.depth.has_value())
    throw InvalidSpecError("give exactly one of c0 and depth");
  if (spec.power < 2 || spec.power % 2 != 0) throw InvalidSpecError("well power must be even and >= 2");
  const auto& mu = *spec.base_measure;

  for (auto i : support_nodes(mu, spec.support_threshold))
    if (!in_open_union(spec.neighborhood, mu.node(i)))
      throw InvalidSpecError("neighborhood does not contain the support of the base measure");

  double a_plus = -kInf;
  for (const auto& iv : spec.neighborhood) a_plus = std::max(a_plus, iv.hi);
  const Domain& domain = base.domain();
  if (!domain.contains(a_plus)) throw InvalidSpecError("gluing point a+ lies outside the domain");

  const double c_w = median_effective_constant(mu, base, spec.support_threshold);
  const double matched = base(a_plus) - log_field(mu, a_plus) + c_w;
  if (!(matched > 0.0))
    throw ConstructionError("base rate function at a+ is not positive (" + std::to_string(matched) + ")");

  CriticalPotential out{base, 0.0, 0.0, spec.power, c_w, matched, a_plus, 0.0};
  if (spec.c0) {
    if (*spec.c0 <= a_plus) throw InvalidSpecError("c0 must lie to the right of the neighborhood");
    out.c0 = *spec.c0;
    out.depth = matched / std::pow(out.c0 - a_plus, spec.power);
  } else {
    if (!(*spec.depth > 0.0)) throw InvalidSpecError("well depth must be positive");
    out.depth = *spec.depth;
    out.c0 = a_plus + std::pow(matched / out.depth, 1.0 / spec.power);
  }
  if (!domain.contains(out.c0)) throw InvalidSpecError("c0 lies outside the domain");
  if (in_closed_union(spec.neighborhood, out.c0)) throw InvalidSpecError("c0 lies in the closure of A");

  std::vector<Piece> pieces;
  for (const auto& piece : base.pieces()) {
    if (piece.interval.lo >= a_plus) continue;
    Piece left = piece;
    left.interval.hi = std::min(left.interval.hi, a_plus);
    left.constant += c_w;
    pieces.push_back(std::move(left));
  }
  const auto h = *domain.locate(a_plus);
  const double right_end = domain.intervals()[h].hi;
  if (right_end > a_plus) {
    pieces.push_back({{a_plus, right_end},
                      {LogFieldTerm{spec.base_measure, {}}, WellTerm{out.depth, out.c0, spec.power}},
                      0.0});
  }
  for (std::size_t k = h + 1; k < domain.intervals().size(); ++k)
    pieces.push_back({domain.intervals()[k],
                      {LogFieldTerm{spec.base_measure, {}}, WellTerm{out.depth, out.c0, spec.power}},
                      0.0});

  out.potential = Potential(domain, std::move(pieces));
  out.epsilon = default_epsilon(spec.neighborhood, out.c0);
  return out;
}

}  // namespace betagas
