#include <doctest.h>

#include <cmath>

#include "betagas/errors.hpp"
#include "betagas/experiments.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace betagas;

namespace {

const fixture::CriticalModel& crit() {
  static const fixture::CriticalModel m = fixture::critical();
  return m;
}

const CriticalityReport& crit_scan() {
  static const CriticalityReport r = scan_criticality(*crit().rate, crit().neighborhood, 4001);
  return r;
}

EscapeExperiment critical_experiment(double beta, std::vector<std::size_t> ns, std::size_t sweeps) {
  EscapeExperiment e;
  e.potential = crit().potential;
  e.neighborhood = crit().neighborhood;
  e.c0 = crit().critical.c0;
  e.epsilon = 0.25;
  e.beta = beta;
  e.ns = std::move(ns);
  e.budget.sweeps = sweeps;
  e.budget.burn_in = 1000;
  e.budget.jumps_per_particle = 1.0;
  e.seed = 77;
  e.workers = 1;
  e.initial_measure = std::make_shared<DiscreteMeasure>(crit().solution->measure);
  e.certificate = crit_scan();
  return e;
}

EscapeTable synthetic(double beta, std::vector<std::pair<std::size_t, double>> points) {
  EscapeTable t;
  t.beta = beta;
  for (auto [n, p] : points) {
    EscapeRow r;
    r.n = n;
    r.frequency = p;
    r.mean_count = p;
    r.n_eff = 1e6;
    r.ci = wilson_interval(p, r.n_eff);
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

TEST_SUITE("laplace ratio") {
  TEST_CASE("pure quadratic reproduces erf(eps sqrt(N d))") {
    for (double d : {0.5, 1.0, 4.0})
      for (double n : {1.0, 10.0, 1e2, 1e4})
        for (double eps : {0.05, 0.25}) {
          auto j = [d](double x) { return d * (x - 2.5) * (x - 2.5); };
          const double ratio = laplace_ratio(j, 2.5, eps, n, 2.0 * d);
          CHECK(std::abs(ratio - std::erf(eps * std::sqrt(n * d))) < 1e-12);
        }
  }

  TEST_CASE("constructed potential at N = 1e4, and closer to 1 than at N = 1e2") {
    const auto m = fixture::critical({.c0 = std::nullopt, .depth = 1.0, .power = 2, .nodes = 1024});
    const double big = laplace_ratio(*m.rate, m.critical.c0, 0.25, 1e4);
    const double small = laplace_ratio(*m.rate, m.critical.c0, 0.25, 1e2);
    CHECK(big >= 0.98);
    CHECK(big <= 1.02);
    CHECK(std::abs(big - 1.0) < std::abs(small - 1.0));
  }

  TEST_CASE("needs positive curvature") {
    CHECK_THROWS_AS(laplace_ratio([](double) { return 0.0; }, 0.0, 0.1, 10.0, 0.0), DomainError);
  }
}

TEST_SUITE("exponent fit") {
  TEST_CASE("exact power law") {
    std::vector<std::pair<std::size_t, double>> pts;
    for (std::size_t n : {32, 64, 128, 256}) pts.push_back({n, 0.03 * std::pow(n, -0.5)});
    const ExponentFit f = fit_escape_exponent(synthetic(2.0, pts));
    CHECK(f.fit.slope == doctest::Approx(-0.5));
    CHECK(f.theory == doctest::Approx(-0.5));
    CHECK(f.quantity == "probability");
    CHECK(f.n_min == 32);
    CHECK(f.n_max == 256);
  }

  TEST_CASE("below 1 the count is fitted") {
    auto t = synthetic(0.5, {{32, 0.4}, {64, 0.45}, {128, 0.5}});
    for (auto& r : t.rows) r.mean_count = 0.1 * std::pow(r.n, 0.25);
    const ExponentFit f = fit_escape_exponent(t);
    CHECK(f.quantity == "count");
    CHECK(f.fit.slope == doctest::Approx(0.25));
    CHECK(f.theory == doctest::Approx(0.25));
  }

  TEST_CASE("saturation names the offending N") {
    try {
      (void)fit_escape_exponent(synthetic(2.0, {{32, 0.01}, {64, 0.0}, {128, 0.001}}));
      FAIL("expected SaturationError");
    } catch (const SaturationError& e) {
      CHECK(std::string(e.what()).find("N = 64") != std::string::npos);
    }
    CHECK_THROWS_AS(fit_escape_exponent(synthetic(0.5, {{32, 0.5}, {64, 1.0}, {128, 0.9}})), SaturationError);
  }

  TEST_CASE("fewer than three N values") {
    CHECK_THROWS_AS(fit_escape_exponent(synthetic(2.0, {{32, 0.01}, {64, 0.005}})), ConfigError);
  }
}

TEST_CASE("certification of the critical point") {
  CHECK_NOTHROW(certify_critical(crit_scan(), crit().critical.c0, 2 * crit_scan().grid_step));
  CHECK_THROWS_AS(certify_critical(crit_scan(), crit().critical.c0 + 0.1, 2 * crit_scan().grid_step),
                  PreconditionError);
  CHECK_THROWS_AS(certify_critical(CriticalityReport{}, 2.5, 0.01), PreconditionError);
  CriticalityReport flat = crit_scan();
  flat.points[0].exponent = 2.5;
  CHECK_THROWS_AS(certify_critical(flat, crit().critical.c0, 0.01), PreconditionError);
}

TEST_SUITE("escape probability") {
  TEST_CASE("beta = 1 and missing certificates are refused") {
    EscapeExperiment e = critical_experiment(1.0, {16}, 10);
    CHECK_THROWS_AS(escape_probability(e), ConfigError);
    e.beta = 2.0;
    e.certificate.reset();
    CHECK_THROWS_AS(escape_probability(e), PreconditionError);
    // A non-critical scan does not certify anything.
    const auto quad = fixture::quadratic(-4.0, 6.0, 1024);
    e.certificate = scan_criticality(*quad.rate, crit().neighborhood, 2001);
    CHECK_THROWS_AS(escape_probability(e), PreconditionError);
    e.ns.clear();
    CHECK_THROWS_AS(escape_probability(e), ConfigError);
  }

  TEST_CASE("non-critical control stays below 0.01 at N = 128") {
    const auto quad = fixture::quadratic(-4.0, 4.0, 512);
    EscapeExperiment e;
    e.potential = quad.potential;
    e.neighborhood = {{-1.6, 1.6}};
    e.beta = 2.0;
    e.ns = {128};
    e.budget.sweeps = 3000;
    e.budget.burn_in = 500;
    e.control = true;
    e.seed = 3;
    e.initial_measure = std::make_shared<DiscreteMeasure>(quad.solution->measure);
    const EscapeTable t = escape_probability(e);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].frequency < 0.01);
  }

  TEST_CASE("row invariants and bitwise determinism across worker counts") {
    EscapeExperiment e = critical_experiment(0.5, {16, 24}, 2000);
    e.budget.chains = 3;
    const EscapeTable a = escape_probability(e);
    e.workers = 2;
    const EscapeTable b = escape_probability(e);
    REQUIRE(a.rows.size() == 2);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const EscapeRow& r = a.rows[i];
      CHECK(r.samples == 6000);
      CHECK(r.frequency >= 0.0);
      CHECK(r.frequency <= 1.0);
      CHECK(r.ci.contains(r.frequency));
      CHECK(r.z_ratio == r.all_inside);
      CHECK(r.mean_count >= r.frequency);
      CHECK(r.max_escapees >= 1);
      CHECK(std::bit_cast<std::uint64_t>(r.frequency) == std::bit_cast<std::uint64_t>(b.rows[i].frequency));
      CHECK(std::bit_cast<std::uint64_t>(r.mean_count) == std::bit_cast<std::uint64_t>(b.rows[i].mean_count));
      CHECK(std::bit_cast<std::uint64_t>(r.n_eff) == std::bit_cast<std::uint64_t>(b.rows[i].n_eff));
    }
  }

  TEST_CASE("beta = 3 escapes no more often than beta = 2 at N = 32") {
    const EscapeTable two = escape_probability(critical_experiment(2.0, {32}, 100000));
    const EscapeTable three = escape_probability(critical_experiment(3.0, {32}, 100000));
    const EscapeRow& r2 = two.rows[0];
    const EscapeRow& r3 = three.rows[0];
    CHECK(r2.frequency > 0.0);
    CHECK(r3.frequency <= r2.frequency);
    CHECK(r3.ci.lo <= r2.ci.hi);
  }
}

TEST_SUITE("phase transition report") {
  TEST_CASE("empty beta list") {
    const auto rep = phase_transition_report(std::vector<EscapeTable>{}, 512);
    CHECK(rep.rows.empty());
    CHECK_FALSE(rep.pass);
    CHECK(rep.verdict == "empty");
  }

  TEST_CASE("synthetic tables on both sides of 1") {
    const auto below = synthetic(0.5, {{128, 0.45}, {256, 0.5}, {512, 0.55}});
    const auto above = synthetic(2.0, {{128, 0.002}, {256, 0.0014}, {512, 0.001}});
    const auto rep = phase_transition_report({below, above}, 512);
    CHECK(rep.pass);
    REQUIRE(rep.fit_below);
    REQUIRE(rep.fit_above);
    CHECK(rep.fit_above->fit.slope < 0.0);
    const auto reversed = phase_transition_report({synthetic(0.5, {{512, 0.001}}), synthetic(2.0, {{512, 0.5}})}, 512);
    CHECK_FALSE(reversed.pass);
    const auto one_sided = phase_transition_report({above}, 512);
    CHECK_FALSE(one_sided.pass);
  }

  TEST_CASE("runner overload refuses beta = 1") {
    CHECK_THROWS_AS(phase_transition_report(critical_experiment(2.0, {16}, 10), {0.5, 1.0}, 16), ConfigError);
  }
}

TEST_SUITE("concentration") {
  std::vector<EnsembleState> exact_states(std::size_t n, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<EnsembleState> out(count);
    for (auto& s : out) s.positions = tridiagonal_sample(n, 2.0, rng);
    return out;
  }

  TEST_CASE("linear statistics have bounded variance in N") {
    const std::vector<std::pair<std::size_t, std::vector<EnsembleState>>> samples{
        {64, exact_states(64, 3000, 1)}, {256, exact_states(256, 3000, 2)}};
    const auto lin = concentration_diagnostic(samples, [](double x) { return x; });
    CHECK(lin.bounded);
    CHECK(lin.growth_ratio < 2.0);
    // Var(sum x) = 1 / beta for V = x^2, at every N.
    for (const auto& r : lin.rows) CHECK(r.variance == doctest::Approx(0.5).epsilon(0.1));
    const auto quad = concentration_diagnostic(samples, [](double x) { return x * x; });
    CHECK(quad.growth_ratio < 2.0);
    const auto flat = concentration_diagnostic(samples, [](double) { return 1.0; });
    for (const auto& r : flat.rows) CHECK(r.variance == 0.0);
  }

  TEST_CASE("too few effective samples") {
    const std::vector<std::pair<std::size_t, std::vector<EnsembleState>>> samples{{16, exact_states(16, 50, 3)}};
    CHECK_THROWS_AS(concentration_diagnostic(samples, [](double x) { return x; }), UndersampleError);
  }
}

TEST_CASE("truncation window where the rate function reaches budget / N") {
  const auto quad = fixture::quadratic(-3.0, 3.0, 512);
  const Interval w = truncation_window(*quad.rate, 512, 50.0);
  const double level = 50.0 / 512.0;
  CHECK((*quad.rate)(w.hi) >= level);
  CHECK((*quad.rate)(w.hi - 6.0 / 512.0 - 1e-9) < level);
  CHECK(w.lo == doctest::Approx(-w.hi).epsilon(1e-9));
  // Closed form: J(x) = level just inside the window edge.
  CHECK(oracle::semicircle_rate(w.hi) >= level * 0.97);
}

TEST_CASE("collect_states keeps every thinned state") {
  ChainConfig c;
  c.n = 4;
  c.beta = 2.0;
  c.potential = crit().potential;
  c.steps = 100;
  c.thinning = 10;
  c.seed = 1;
  CHECK(collect_states(c).size() == 10);
}
