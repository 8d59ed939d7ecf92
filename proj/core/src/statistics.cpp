#include "betagas/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "betagas/errors.hpp"

namespace betagas {

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

double autocorrelation_time(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) return 1.0;
  const double m = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = series[i] - m;

  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += c[i] * c[i + lag];
    return acc / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return 1.0;

  // Pairs Gamma_m = gamma(2m) + gamma(2m+1), truncated at the first
  // nonpositive pair and forced to be nonincreasing.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::max();
  for (std::size_t lag = 0; lag + 1 < n / 2; lag += 2) {
    double pair = autocov(lag) + autocov(lag + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = (2.0 * sum - g0) / g0;
  return std::max(tau, 1.0 / static_cast<double>(n));
}

MeanEstimate estimate_mean(std::span<const double> series) {
  MeanEstimate est;
  est.n = series.size();
  if (series.empty()) return est;
  est.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(est.n);
  est.tau = autocorrelation_time(series);
  est.ess = static_cast<double>(est.n) / est.tau;
  const double var = sample_variance(series);
  est.stderr_ = est.ess > 0.0 ? std::sqrt(var / est.ess) : 0.0;
  return est;
}

ConfidenceInterval wilson_interval(double p_hat, double n_eff, double z) {
  if (!(n_eff > 0.0)) return {0.0, 1.0};
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n_eff;
  const double centre = (p_hat + z2 / (2.0 * n_eff)) / denom;
  const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / n_eff + z2 / (4.0 * n_eff * n_eff)) / denom;
  // The bound touching 0 or 1 is exact in closed form; rounding would leave
  // a few ulps and break the containment of the estimate.
  const double lo = p_hat <= 0.0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = p_hat >= 1.0 ? 1.0 : std::min(1.0, centre + half);
  return {std::min(lo, p_hat), std::max(hi, p_hat)};
}

LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("ols_fit: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("ols_fit needs at least two points");
  const double nd = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("ols_fit: x values are all equal");
  LinearFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  fit.slope_stderr = n > 2 ? std::sqrt(rss / (nd - 2.0) / sxx) : 0.0;
  return fit;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace betagas
