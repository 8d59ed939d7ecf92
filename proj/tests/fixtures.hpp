#pragma once

#include <memory>
#include <optional>

#include "betagas/equilibrium.hpp"
#include "betagas/potential.hpp"
#include "betagas/ratefn.hpp"

namespace fixture {

struct Model {
  std::shared_ptr<const betagas::Potential> potential;
  std::shared_ptr<const betagas::EquilibriumSolution> solution;
  std::shared_ptr<const betagas::RateFunction> rate;
};

struct CriticalModel : Model {
  explicit CriticalModel(betagas::CriticalPotential c) : critical(std::move(c)) {}
  betagas::CriticalPotential critical;
  std::shared_ptr<const betagas::EquilibriumSolution> base_solution;
  betagas::Neighborhood neighborhood;
};

// V = x^2 on [lo, hi].
Model quadratic(double lo = -3.0, double hi = 3.0, std::size_t nodes = 512);

// Critical potential glued to W = x^2 on B = [-4, 6] at a+ = 2, A = (-2, 2).
// Exactly one of c0 and depth is set.
struct CriticalOptions {
  std::optional<double> c0 = 2.5;
  std::optional<double> depth;
  int power = 2;
  std::size_t nodes = 1024;
};
CriticalModel critical(const CriticalOptions& options = {});

}  // namespace fixture
