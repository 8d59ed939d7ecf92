#include "betagas/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "betagas/errors.hpp"

namespace betagas {

void run_parallel(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs);
  if (workers <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs; k = next++) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void certify_critical(const CriticalityReport& report, double c0, double tolerance) {
  if (report.points.size() != 1)
    throw PreconditionError("expected exactly one critical point, scan found " + std::to_string(report.points.size()));
  const CriticalPoint& p = report.points.front();
  if (std::abs(p.location - c0) > tolerance)
    throw PreconditionError("critical point at " + std::to_string(p.location) + " does not match c0 = " +
                            std::to_string(c0));
  if (std::abs(p.exponent - 2.0) > 0.1)
    throw PreconditionError("local exponent q = " + std::to_string(p.exponent) + " is not close to 2");
}

namespace {

struct ChainSeries {
  std::vector<double> escaped;
  std::vector<double> count;
  std::vector<double> near;
  std::uint32_t max_escapees = 0;
  MoveCounts single;
  MoveCounts jump;
};

ChainConfig chain_config(const EscapeExperiment& exp, std::size_t n, std::size_t chain) {
  ChainConfig c;
  c.n = n;
  c.beta = exp.beta;
  c.potential = exp.potential;
  c.domain = exp.domain;
  c.steps = exp.budget.sweeps;
  c.burn_in = exp.budget.burn_in;
  c.thinning = exp.budget.thinning;
  c.seed = chain_seed(exp.seed, exp.beta, n, chain);
  c.jump_rate = exp.budget.jumps_per_particle < 0.0 ? -1.0 : exp.budget.jumps_per_particle * static_cast<double>(n);
  c.affine_moves = exp.budget.affine_moves;
  c.neighborhood = exp.neighborhood;
  c.c0 = exp.c0;
  c.epsilon = exp.c0 ? exp.epsilon : 0.0;
  c.initial_measure = exp.initial_measure;
  c.table_spacing = exp.budget.table_spacing;
  return c;
}

EscapeRow aggregate(std::size_t n, const std::vector<ChainSeries>& chains) {
  EscapeRow row;
  row.n = n;
  row.chains = chains.size();
  double sum_count = 0.0, sum_near = 0.0, count_var = 0.0;
  std::size_t inside = 0, escaped = 0;
  MoveCounts single, jump;
  for (const auto& ch : chains) {
    row.samples += ch.escaped.size();
    for (double e : ch.escaped) (e > 0.0 ? escaped : inside) += 1;
    for (double v : ch.count) sum_count += v;
    for (double v : ch.near) sum_near += v;
    const MeanEstimate e = estimate_mean(ch.escaped);
    row.n_eff += e.ess;
    const MeanEstimate c = estimate_mean(ch.count);
    count_var += c.stderr_ * c.stderr_ * static_cast<double>(c.n) * static_cast<double>(c.n);
    row.max_escapees = std::max(row.max_escapees, ch.max_escapees);
    single += ch.single;
    jump += ch.jump;
  }
  const double total = static_cast<double>(row.samples);
  row.frequency = static_cast<double>(escaped) / total;
  row.all_inside = static_cast<double>(inside) / total;
  // Z_A / Z is the probability that every particle sits in A.
  row.z_ratio = row.all_inside;
  row.mean_count = sum_count / total;
  row.count_stderr = std::sqrt(count_var) / total;
  row.mean_near = sum_near / total;
  row.tau = row.n_eff > 0.0 ? total / row.n_eff : 1.0;
  row.ci = wilson_interval(row.frequency, row.n_eff);
  row.acceptance = single.rate();
  row.jump_acceptance = jump.rate();
  return row;
}

}  // namespace

EscapeTable escape_probability(const EscapeExperiment& exp) {
  if (exp.beta == 1.0)
    throw ConfigError("beta = 1 is the critical case of the transition and is not supported");
  if (!(exp.beta > 0.0)) throw ConfigError("beta must be positive");
  if (exp.ns.empty()) throw ConfigError("escape experiment needs at least one N");
  if (!exp.potential) throw ConfigError("escape experiment needs a potential");
  if (exp.budget.chains == 0 || exp.budget.sweeps == 0) throw ConfigError("chain budget must be positive");
  if (!exp.control) {
    if (!exp.certificate || !exp.c0) throw PreconditionError("potential has not been certified critical");
    certify_critical(*exp.certificate, *exp.c0, std::max(2.0 * exp.certificate->grid_step, 1e-6));
  }

  const std::size_t per_n = exp.budget.chains;
  std::vector<ChainSeries> series(exp.ns.size() * per_n);
  // Largest N first so that the slowest jobs start early.
  std::vector<std::size_t> order(series.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return exp.ns[a / per_n] > exp.ns[b / per_n]; });

  run_parallel(series.size(), exp.workers, [&](std::size_t job) {
    const std::size_t slot = order[job];
    const std::size_t n = exp.ns[slot / per_n];
    ChainSeries& out = series[slot];
    out.escaped.reserve(exp.budget.sweeps / exp.budget.thinning);
    const ChainResult r = run_chain_full(chain_config(exp, n, slot % per_n), [&](const EnsembleState&, const ObservableRecord& rec) {
      out.escaped.push_back(rec.escape_count > 0 ? 1.0 : 0.0);
      out.count.push_back(rec.escape_count);
      out.near.push_back(rec.near_count);
      out.max_escapees = std::max(out.max_escapees, rec.escape_count);
    });
    out.single = r.totals.single;
    out.jump = r.totals.jump;
  });

  EscapeTable table;
  table.beta = exp.beta;
  table.control = exp.control;
  for (std::size_t i = 0; i < exp.ns.size(); ++i) {
    std::vector<ChainSeries> chunk(series.begin() + static_cast<std::ptrdiff_t>(i * per_n),
                                   series.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_n));
    table.rows.push_back(aggregate(exp.ns[i], chunk));
  }
  return table;
}

ExponentFit fit_escape_exponent(const EscapeTable& table) {
  if (table.rows.size() < 3) throw ConfigError("exponent fit needs at least three values of N");
  ExponentFit out;
  out.quantity = table.beta > 1.0 ? "probability" : "count";
  out.theory = 0.5 * (1.0 - table.beta);
  std::vector<double> x, y;
  for (const EscapeRow& r : table.rows) {
    if (r.frequency <= 0.0 || r.frequency >= 1.0)
      throw SaturationError("escape frequency " + std::to_string(r.frequency) + " at N = " + std::to_string(r.n) +
                            " is saturated; the fit is undefined");
    x.push_back(std::log(static_cast<double>(r.n)));
    y.push_back(std::log(table.beta > 1.0 ? r.frequency : r.mean_count));
  }
  out.fit = ols_fit(x, y);
  out.n_min = table.rows.front().n;
  out.n_max = table.rows.front().n;
  for (const EscapeRow& r : table.rows) {
    out.n_min = std::min(out.n_min, r.n);
    out.n_max = std::max(out.n_max, r.n);
  }
  return out;
}

double laplace_ratio(const std::function<double(double)>& j, double c0, double epsilon, double n, double curvature,
                     double tolerance) {
  if (!(curvature > 0.0)) throw DomainError("Laplace ratio needs a positive second derivative");
  auto integrand = [&](double x) { return std::exp(-n * j(x)); };
  // Split at c0 so that both halves see a smooth monotone integrand.
  double err = 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double left = GK::integrate(integrand, c0 - epsilon, c0, 12, tolerance, &err);
  const double right = GK::integrate(integrand, c0, c0 + epsilon, 12, tolerance, &err);
  return (left + right) / std::sqrt(2.0 * std::numbers::pi / (n * curvature));
}

double laplace_ratio(const RateFunction& rf, double c0, double epsilon, double n) {
  const double h = std::max(1e-4 * std::max(1.0, std::abs(c0)), epsilon * 1e-3);
  const double curvature = (rf.effective(c0 + h) - 2.0 * rf.effective(c0) + rf.effective(c0 - h)) / (h * h);
  // N J carries the rounding of two log fields, about 1e-15 * N; asking for
  // more than 1e-10 would only make the bisection chase that noise.
  return laplace_ratio([&rf](double x) { return rf(x); }, c0, epsilon, n, curvature, 1e-10);
}

ConcentrationReport concentration_diagnostic(const std::vector<std::pair<std::size_t, std::vector<EnsembleState>>>& samples,
                                             const std::function<double(double)>& h) {
  ConcentrationReport rep;
  for (const auto& [n, states] : samples) {
    std::vector<double> values;
    values.reserve(states.size());
    for (const auto& s : states) {
      double acc = 0.0;
      for (double x : s.positions) acc += h(x);
      values.push_back(acc);
    }
    const MeanEstimate est = estimate_mean(values);
    if (est.ess < 100.0)
      throw UndersampleError("only " + std::to_string(est.ess) + " effective samples at N = " + std::to_string(n));
    rep.rows.push_back({n, sample_variance(values), est.mean, est.ess});
  }
  if (rep.rows.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(rep.rows.begin(), rep.rows.end(),
                                              [](const auto& a, const auto& b) { return a.n < b.n; });
    rep.growth_ratio = lo->variance > 0.0 ? hi->variance / lo->variance : (hi->variance > 0.0 ? kInf : 0.0);
    rep.bounded = rep.growth_ratio < 2.0;
  }
  return rep;
}

PhaseTransitionReport phase_transition_report(const std::vector<EscapeTable>& tables, std::size_t n) {
  PhaseTransitionReport rep;
  rep.n = n;
  for (const EscapeTable& t : tables) {
    for (const EscapeRow& r : t.rows)
      if (r.n == n) rep.rows.push_back({t.beta, r});
    if (t.control || t.rows.size() < 3) continue;
    try {
      if (t.beta < 1.0 && !rep.fit_below) rep.fit_below = fit_escape_exponent(t);
      if (t.beta > 1.0 && !rep.fit_above) rep.fit_above = fit_escape_exponent(t);
    } catch (const SaturationError&) {
      // Reported through the missing fit.
    }
  }
  if (rep.rows.empty()) {
    rep.verdict = "empty";
    return rep;
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) { return a.beta < b.beta; });
  bool below = false, above = false, separated = true;
  for (const auto& lo : rep.rows) {
    if (lo.beta < 1.0) below = true;
    if (lo.beta > 1.0) above = true;
    if (!(lo.beta < 1.0)) continue;
    for (const auto& hi : rep.rows) {
      if (!(hi.beta > 1.0)) continue;
      if (!(lo.row.frequency > hi.row.frequency && lo.row.ci.disjoint(hi.row.ci))) separated = false;
    }
  }
  rep.pass = below && above && separated;
  if (!below || !above)
    rep.verdict = "beta list does not straddle 1";
  else
    rep.verdict = separated ? "beta < 1 dominates beta > 1 with disjoint intervals" : "intervals overlap or order is reversed";
  return rep;
}

PhaseTransitionReport phase_transition_report(const EscapeExperiment& base, const std::vector<double>& betas,
                                              std::size_t n) {
  std::vector<EscapeTable> tables;
  for (double beta : betas) {
    if (beta == 1.0) throw ConfigError("beta = 1 is the critical case of the transition and is not supported");
    EscapeExperiment e = base;
    e.beta = beta;
    e.ns = {n};
    tables.push_back(escape_probability(e));
  }
  return phase_transition_report(tables, n);
}

std::vector<EnsembleState> collect_states(const ChainConfig& config) {
  std::vector<EnsembleState> out;
  out.reserve(config.steps / std::max<std::size_t>(config.thinning, 1));
  run_chain_full(config, [&](const EnsembleState& s, const ObservableRecord&) { out.push_back(s); });
  return out;
}

Interval truncation_window(const RateFunction& rf, std::size_t n_max, double budget) {
  if (n_max == 0) throw DomainError("n_max must be positive");
  const double level = budget / static_cast<double>(n_max);
  const auto& sol = rf.solution();
  if (sol.support.empty()) throw ThresholdError("solution has no support");
  const auto nodes = sol.measure.nodes();
  const double a = sol.support.front().bounds.lo, b = sol.support.back().bounds.hi;
  Interval w{nodes.front(), nodes.back()};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double x = nodes[i];
    if (x > b && rf(x) >= level) {
      w.hi = x;
      break;
    }
  }
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const double x = nodes[i];
    if (x < a && rf(x) >= level) {
      w.lo = x;
      break;
    }
  }
  return w;
}

}  // namespace betagas
