#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace betagas {

/// Mean of a correlated series with an autocorrelation-adjusted error.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  /// Integrated autocorrelation time (1 for independent draws).
  double tau = 1.0;
  /// n / tau.
  double ess = 0.0;
  std::size_t n = 0;
};

/// Integrated autocorrelation time from Geyer's initial monotone sequence.
double autocorrelation_time(std::span<const double> series);

MeanEstimate estimate_mean(std::span<const double> series);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool disjoint(const ConfidenceInterval& o) const noexcept { return hi < o.lo || o.hi < lo; }
};

/// Wilson score interval for a proportion observed with `n_eff` effective trials.
ConfidenceInterval wilson_interval(double p_hat, double n_eff, double z = 1.959963984540054);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit ols_fit(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double distance = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

double sample_variance(std::span<const double> xs);

}  // namespace betagas
