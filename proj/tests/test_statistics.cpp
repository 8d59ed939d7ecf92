#include <doctest.h>

#include <cmath>
#include <random>

#include "betagas/statistics.hpp"

using namespace betagas;

TEST_CASE("Wilson interval coverage on Bernoulli streams") {
  std::mt19937_64 rng(2024);
  for (double p : {0.02, 0.3}) {
    std::bernoulli_distribution coin(p);
    const std::size_t trials = 400;
    int covered = 0;
    for (int rep = 0; rep < 200; ++rep) {
      double hits = 0.0;
      for (std::size_t i = 0; i < trials; ++i) hits += coin(rng);
      const double p_hat = hits / trials;
      const auto ci = wilson_interval(p_hat, trials);
      CHECK(ci.contains(p_hat));
      covered += ci.contains(p);
    }
    const double coverage = covered / 200.0;
    CHECK(coverage >= 0.92);
    CHECK(coverage <= 0.98);
  }
}

TEST_CASE("Wilson interval edge cases") {
  const auto zero = wilson_interval(0.0, 100.0);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);
  const auto one = wilson_interval(1.0, 100.0);
  CHECK(one.hi == doctest::Approx(1.0));
  CHECK(one.lo < 1.0);
  CHECK(wilson_interval(0.2, 50.0).disjoint(wilson_interval(0.8, 50.0)));
  CHECK_FALSE(wilson_interval(0.4, 50.0).disjoint(wilson_interval(0.5, 50.0)));
}

TEST_CASE("AR(1) autocorrelation time (1 + rho) / (1 - rho)") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (double rho : {0.0, 0.5, 0.9}) {
    std::vector<double> xs(400000);
    double x = 0.0;
    for (auto& v : xs) v = x = rho * x + std::sqrt(1.0 - rho * rho) * g(rng);
    const double tau = autocorrelation_time(xs);
    CHECK(tau == doctest::Approx((1.0 + rho) / (1.0 - rho)).epsilon(0.1));
    const MeanEstimate e = estimate_mean(xs);
    CHECK(e.ess == doctest::Approx(xs.size() / tau));
    CHECK(std::abs(e.mean) < 4.0 * e.stderr_);
  }
}

TEST_CASE("constant series") {
  const std::vector<double> c(100, 3.0);
  const MeanEstimate e = estimate_mean(c);
  CHECK(e.mean == 3.0);
  CHECK(e.stderr_ == 0.0);
  CHECK(sample_variance(c) == 0.0);
}

TEST_CASE("OLS recovers an exact line and reports its error") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 - 0.75 * v);
  const LinearFit f = ols_fit(x, y);
  CHECK(f.slope == doctest::Approx(-0.75));
  CHECK(f.intercept == doctest::Approx(2.5));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.slope_stderr < 1e-12);

  // y = x + (+-1): slope 1, stderr from the residual variance.
  const std::vector<double> noisy{1 + 1, 2 - 1, 3 + 1, 4 - 1};
  const std::vector<double> xs{1, 2, 3, 4};
  const LinearFit g = ols_fit(xs, noisy);
  CHECK(g.slope == doctest::Approx(0.6));
  // s^2 = RSS / (n - 2) = 3.2 / 2, Sxx = 5.
  CHECK(g.slope_stderr == doctest::Approx(std::sqrt(1.6 / 5.0)));
}

TEST_CASE("Kolmogorov-Smirnov") {
  // Tabulated critical values of the Kolmogorov distribution.
  CHECK(kolmogorov_q(1.358) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(kolmogorov_q(1.628) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(kolmogorov_q(0.0) == 1.0);

  const std::vector<double> a{0.1, 0.4, 0.7, 0.9};
  CHECK(ks_two_sample(a, a).distance == 0.0);
  const std::vector<double> b{1.1, 1.4};
  CHECK(ks_two_sample(a, b).distance == 1.0);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> x(5000), y(5000), z(5000);
  for (auto& v : x) v = g(rng);
  for (auto& v : y) v = g(rng);
  for (auto& v : z) v = g(rng) + 0.2;
  CHECK(ks_two_sample(x, y).p_value > 0.01);
  CHECK(ks_two_sample(x, z).p_value < 1e-6);
}
