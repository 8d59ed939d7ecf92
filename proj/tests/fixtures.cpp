#include "fixtures.hpp"

namespace fixture {

using namespace betagas;

Model quadratic(double lo, double hi, std::size_t nodes) {
  Model m;
  const Domain b = Domain::interval(lo, hi);
  m.potential = std::make_shared<Potential>(Potential::polynomial(b, {0.0, 0.0, 1.0}));
  GridConfig grid;
  grid.nodes = nodes;
  grid.tolerance = 1e-12;
  m.solution = std::make_shared<EquilibriumSolution>(solve_equilibrium(*m.potential, b, grid));
  m.rate = std::make_shared<RateFunction>(m.solution, m.potential);
  return m;
}

CriticalModel critical(const CriticalOptions& o) {
  const Domain b = Domain::interval(-4.0, 6.0);
  const Potential w = Potential::polynomial(b, {0.0, 0.0, 1.0});
  GridConfig grid;
  grid.nodes = o.nodes;
  grid.tolerance = 1e-12;
  auto base = std::make_shared<EquilibriumSolution>(solve_equilibrium(w, b, grid));
  CriticalPotentialSpec spec;
  spec.base_measure = std::make_shared<DiscreteMeasure>(base->measure);
  spec.neighborhood = {{-2.0, 2.0}};
  spec.c0 = o.c0;
  spec.depth = o.depth;
  spec.power = o.power;
  CriticalModel m(build_critical_potential(spec, w));
  m.base_solution = base;
  m.neighborhood = spec.neighborhood;
  m.potential = std::make_shared<Potential>(m.critical.potential);
  m.solution =
      std::make_shared<EquilibriumSolution>(solve_equilibrium(*m.potential, b, grid, &m.base_solution->measure));
  m.rate = std::make_shared<RateFunction>(m.solution, m.potential);
  return m;
}

}  // namespace fixture
