#include "betagas/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#if __has_include(<experimental/simd>)
#include <experimental/simd>
#define BETAGAS_HAS_SIMD 1
#endif
#include <functional>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "betagas/errors.hpp"
#include "betagas/kernel.hpp"

namespace betagas {

namespace {

#ifdef BETAGAS_HAS_SIMD
namespace stdx = std::experimental;
#endif

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kTuneWindow = 20;

// Products of (y - x_k) and (z - x_k) over [j, end); returns the first index
// left for the scalar tail.
template <bool Ratio>
std::size_t lane_products(const double* x, std::size_t j, std::size_t end, double y, double z, double& pn,
                          double& pd) noexcept {
#ifdef BETAGAS_HAS_SIMD
  using V = stdx::native_simd<double>;
  constexpr std::size_t kLanes = V::size();
  const V yv(y), zv(z);
  V num0(1.0), num1(1.0), den0(1.0), den1(1.0);
  std::size_t k = j;
  for (; k + 2 * kLanes <= end; k += 2 * kLanes) {
    const V a(x + k, stdx::element_aligned), b(x + k + kLanes, stdx::element_aligned);
    num0 *= yv - a;
    num1 *= yv - b;
    if constexpr (Ratio) {
      den0 *= zv - a;
      den1 *= zv - b;
    }
  }
  pn = stdx::reduce(num0 * num1, std::multiplies<>());
  pd = Ratio ? stdx::reduce(den0 * den1, std::multiplies<>()) : 1.0;
  return k;
#else
  constexpr std::size_t kLanes = 8;
  double num[kLanes], den[kLanes];
  for (std::size_t l = 0; l < kLanes; ++l) num[l] = den[l] = 1.0;
  std::size_t k = j;
  for (; k + kLanes <= end; k += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      num[l] *= y - x[k + l];
      if constexpr (Ratio) den[l] *= z - x[k + l];
    }
  }
  pn = pd = 1.0;
  for (std::size_t l = 0; l < kLanes; ++l) {
    pn *= num[l];
    pd *= den[l];
  }
  return k;
#endif
}

// Sum over x[0..n) of log|y - x_j| (or of log|(y - x_j) / (z - x_j)| when
// Ratio), taking one logarithm per chunk of 128 factors. Chunks whose product
// leaves the normal range are redone term by term.
template <bool Ratio>
double chunked_log_sum(const double* x, std::size_t n, double y, double z) noexcept {
  constexpr std::size_t kChunk = 128;
  double total = 0.0;
  for (std::size_t j = 0; j < n;) {
    const std::size_t end = std::min(n, j + kChunk);
    double pn = 1.0, pd = 1.0;
    std::size_t k = lane_products<Ratio>(x, j, end, y, z, pn, pd);
    for (; k < end; ++k) {
      pn *= y - x[k];
      if constexpr (Ratio) pd *= z - x[k];
    }
    const double r = pn / pd;
    if (std::isnormal(pn) && std::isnormal(pd) && std::isnormal(r)) {
      total += std::log(std::abs(r));
    } else {
      for (k = j; k < end; ++k) {
        const double d = std::abs(y - x[k]);
        if (d == 0.0) return kNegInf;
        total += std::log(d);
        if constexpr (Ratio) total -= std::log(std::abs(z - x[k]));
      }
    }
    j = end;
  }
  return total;
}

double pair_log_sum(std::span<const double> x) noexcept {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double s = chunked_log_sum<false>(x.data() + i + 1, x.size() - i - 1, x[i], 0.0);
    if (s == kNegInf) return kNegInf;
    total += s;
  }
  return total;
}

double term_slope(const Term& term, double x) {
  return std::visit(
      [x](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, PolynomialTerm>) {
          double acc = 0.0;
          for (std::size_t k = t.coefficients.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * t.coefficients[k];
          return acc;
        } else if constexpr (std::is_same_v<T, WellTerm>) {
          return t.depth * t.power * std::pow(x - t.center, t.power - 1);
        } else {
          return log_field_derivative(*t.measure, x);
        }
      },
      term);
}

bool inside_any(const Domain& outer, const Interval& iv) {
  return std::any_of(outer.intervals().begin(), outer.intervals().end(),
                     [&](const Interval& o) { return o.lo <= iv.lo && iv.hi <= o.hi; });
}

double uniform_on(const Domain& d, double u) {
  const double len = d.length();
  double target = u * len;
  for (const auto& iv : d.intervals()) {
    if (target <= iv.length()) return iv.lo + target;
    target -= iv.length();
  }
  return d.upper();
}

// Cell-wise linear CDF of a grid measure.
double measure_cdf(const DiscreteMeasure& mu, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Interval& c = mu.cell(i);
    if (x >= c.hi) {
      acc += mu.weight(i);
    } else if (x > c.lo) {
      acc += mu.weight(i) * (x - c.lo) / c.length();
    }
  }
  return std::min(acc, 1.0);
}

}  // namespace

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine << ' ' << normal;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng.engine >> rng.normal;
  if (!is) throw ConfigError("malformed random-number state");
  return rng;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t chain_seed(std::uint64_t global, double beta, std::size_t n, std::size_t chain) noexcept {
  std::uint64_t h = splitmix64(global);
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(beta));
  h = splitmix64(h ^ static_cast<std::uint64_t>(n));
  return splitmix64(h ^ static_cast<std::uint64_t>(chain));
}

FastPotential::FastPotential(std::shared_ptr<const Potential> exact, double spacing) : exact_(std::move(exact)) {
  if (!exact_) throw ConfigError("FastPotential needs a potential");
  for (const Piece& p : exact_->pieces()) {
    piece_hi_.push_back(p.interval.hi);
    if (spacing <= 0.0 || !p.has_log_field() || !p.interval.bounded()) {
      tables_.emplace_back();
      continue;
    }
    Table t;
    const std::size_t cells = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(p.interval.length() / spacing)));
    t.lo = p.interval.lo;
    t.step = p.interval.length() / static_cast<double>(cells);
    t.value.resize(cells + 1);
    t.slope.resize(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
      const double x = k == cells ? p.interval.hi : t.lo + t.step * static_cast<double>(k);
      t.value[k] = p.value(x);
      double s = 0.0;
      for (const Term& term : p.terms) s += term_slope(term, x);
      t.slope[k] = s;
    }
    tables_.emplace_back(std::move(t));
    // Midpoint audit against the exact piece.
    for (std::size_t k = 0; k < cells; k += 3) {
      const double x = p.interval.lo + (static_cast<double>(k) + 0.5) * tables_.back()->step;
      max_error_ = std::max(max_error_, std::abs((*this)(x) - p.value(x)));
    }
  }
}

double FastPotential::operator()(double x) const noexcept {
  if (!exact_->domain().contains(x)) return kInf;
  const std::size_t idx = std::min<std::size_t>(
      static_cast<std::size_t>(std::lower_bound(piece_hi_.begin(), piece_hi_.end(), x) - piece_hi_.begin()),
      piece_hi_.size() - 1);
  if (idx >= tables_.size() || !tables_[idx]) return exact_->pieces()[std::min(idx, piece_hi_.size() - 1)].value(x);
  const Table& t = *tables_[idx];
  const double pos = (x - t.lo) / t.step;
  const std::size_t last = t.value.size() - 2;
  const std::size_t k = std::min(static_cast<std::size_t>(std::max(pos, 0.0)), last);
  const double u = pos - static_cast<double>(k);
  const double u2 = u * u, v = 1.0 - u, v2 = v * v;
  return (1.0 + 2.0 * u) * v2 * t.value[k] + u * v2 * t.step * t.slope[k] + u2 * (3.0 - 2.0 * u) * t.value[k + 1] -
         u2 * v * t.step * t.slope[k + 1];
}

SweepStats& SweepStats::operator+=(const SweepStats& o) noexcept {
  single += o.single;
  jump += o.jump;
  translate += o.translate;
  dilate += o.dilate;
  log_density_change += o.log_density_change;
  return *this;
}

double log_density(const EnsembleState& state, const Potential& v, const Domain& b, double beta) {
  const double n = static_cast<double>(state.size());
  double pot = 0.0;
  for (double x : state.positions) {
    if (!b.contains(x) || !v.domain().contains(x)) return kNegInf;
    pot += v(x);
  }
  const double pairs = pair_log_sum(state.positions);
  if (pairs == kNegInf) return kNegInf;
  return -0.5 * n * beta * pot + beta * pairs;
}

double log_density(const EnsembleState& state, const Potential& v, double beta) {
  return log_density(state, v, v.domain(), beta);
}

ChainKernel::ChainKernel(ChainConfig config)
    : config_(std::move(config)), domain_(Domain::interval(0.0, 1.0)) {
  const auto& c = config_;
  if (c.n == 0) throw ConfigError("chain needs N >= 1");
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta must be a positive number");
  if (!c.potential) throw ConfigError("chain needs a potential");
  if (c.thinning == 0) throw ConfigError("thinning must be positive");
  domain_ = c.domain.value_or(c.potential->domain());
  for (const auto& iv : domain_.intervals())
    if (!inside_any(c.potential->domain(), iv)) throw ConfigError("sampling domain is not inside the potential's domain");
  if (c.c0 && !(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive when c0 is given");
  if (c.restricted) {
    const auto& r = *c.restricted;
    if (r.boxes.empty() || r.boxes.size() != r.counts.size()) throw ConfigError("restricted mode needs one count per box");
    std::size_t total = 0;
    for (std::size_t h = 0; h < r.boxes.size(); ++h) {
      if (!(r.boxes[h].lo < r.boxes[h].hi)) throw ConfigError("restricted box must have positive length");
      if (h > 0 && !(r.boxes[h - 1].hi < r.boxes[h].lo)) throw ConfigError("restricted boxes must be disjoint and sorted");
      if (!inside_any(domain_, r.boxes[h])) throw ConfigError("restricted box leaves the sampling domain");
      total += r.counts[h];
    }
    if (total != c.n) throw ConfigError("restricted counts must sum to N");
  }

  fast_ = std::make_shared<FastPotential>(c.potential, c.table_spacing);
  field_ = 0.5 * static_cast<double>(c.n) * c.beta;
  const double base = c.proposal_scale < 0.0 ? 1.0 / static_cast<double>(c.n) : c.proposal_scale;
  scales_ = {base, base, 1.0 / static_cast<double>(c.n)};

  if (!c.neighborhood.empty()) {
    Interval h{c.neighborhood.front().lo, c.neighborhood.front().hi};
    for (const auto& iv : c.neighborhood) {
      h.lo = std::min(h.lo, iv.lo);
      h.hi = std::max(h.hi, iv.hi);
    }
    if (h.bounded()) hull_a_ = h;
  }
  if (!c.restricted) {
    jump_weights_ = {domain_.bounded() ? 1.0 : 0.0, hull_a_ ? 1.0 : 0.0, c.c0 ? 1.0 : 0.0};
    const double sum = jump_weights_[0] + jump_weights_[1] + jump_weights_[2];
    if (sum > 0.0)
      for (double& w : jump_weights_) w /= sum;
    jump_rate_ = sum > 0.0 ? (c.jump_rate < 0.0 ? 1.0 / static_cast<double>(c.n) : c.jump_rate) : 0.0;
    if (c.affine_moves) affine_region_ = hull_a_ ? *hull_a_ : domain_.hull();
  } else {
    jump_rate_ = c.jump_rate < 0.0 ? 1.0 / static_cast<double>(c.n) : c.jump_rate;
  }
}

EnsembleState ChainKernel::initial_state() const {
  const auto& c = config_;
  EnsembleState s;
  s.seed = c.seed;
  s.positions.reserve(c.n);
  auto spread = [&](const Interval& box, std::size_t count, std::uint32_t label) {
    double f_lo = 0.0, f_hi = 0.0;
    if (c.initial_measure) {
      f_lo = measure_cdf(*c.initial_measure, box.lo);
      f_hi = measure_cdf(*c.initial_measure, box.hi);
    }
    for (std::size_t k = 0; k < count; ++k) {
      const double frac = (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      double x = box.lo + frac * box.length();
      if (f_hi - f_lo > 1e-12) x = std::clamp(c.initial_measure->quantile(f_lo + frac * (f_hi - f_lo)), box.lo, box.hi);
      s.positions.push_back(x);
      if (c.restricted) s.boxes.push_back(label);
    }
  };
  if (c.restricted) {
    for (std::size_t h = 0; h < c.restricted->boxes.size(); ++h)
      spread(c.restricted->boxes[h], c.restricted->counts[h], static_cast<std::uint32_t>(h));
  } else if (c.initial_measure) {
    for (std::size_t k = 0; k < c.n; ++k)
      s.positions.push_back(c.initial_measure->quantile((static_cast<double>(k) + 0.5) / static_cast<double>(c.n)));
  } else {
    Interval window{std::max(domain_.lower(), -1.0), std::min(domain_.upper(), 1.0)};
    if (!(window.lo < window.hi)) window = domain_.lower() > -kInf ? Interval{domain_.lower(), domain_.lower() + 1.0}
                                                                : Interval{domain_.upper() - 1.0, domain_.upper()};
    const Domain d = domain_.clipped(window);
    for (std::size_t k = 0; k < c.n; ++k)
      s.positions.push_back(uniform_on(d, (static_cast<double>(k) + 0.5) / static_cast<double>(c.n)));
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!domain_.contains(s.positions[i])) throw ConfigError("initial measure puts particles outside the sampling domain");
    for (std::size_t j = 0; j < i; ++j)
      if (s.positions[j] == s.positions[i]) throw ConfigError("initial positions coincide");
  }
  if (c.cache_interactions) refresh_cache(s);
  return s;
}

double ChainKernel::log_density(const EnsembleState& state) const {
  double pot = 0.0;
  for (double x : state.positions) {
    if (!domain_.contains(x)) return kNegInf;
    pot += (*fast_)(x);
  }
  const double pairs = pair_log_sum(state.positions);
  if (pairs == kNegInf) return kNegInf;
  return -field_ * pot + config_.beta * pairs;
}

void ChainKernel::refresh_cache(EnsembleState& s) const {
  s.interactions.assign(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) s.interactions[i] = site_sum(s, i, s.positions[i]);
}

double ChainKernel::cache_error(const EnsembleState& s) const {
  if (s.interactions.size() != s.size()) return kInf;
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    worst = std::max(worst, std::abs(s.interactions[i] - site_sum(s, i, s.positions[i])));
  return worst;
}

double ChainKernel::site_sum(const EnsembleState& s, std::size_t i, double y) const noexcept {
  const double* x = s.positions.data();
  const double left = chunked_log_sum<false>(x, i, y, 0.0);
  if (left == kNegInf) return kNegInf;
  const double right = chunked_log_sum<false>(x + i + 1, s.size() - i - 1, y, 0.0);
  return right == kNegInf ? kNegInf : left + right;
}

double ChainKernel::pair_delta(const EnsembleState& s, std::size_t i, double y) const noexcept {
  if (!s.interactions.empty()) {
    const double fresh = site_sum(s, i, y);
    return fresh == kNegInf ? kNegInf : fresh - s.interactions[i];
  }
  const double* x = s.positions.data();
  const double xo = s.positions[i];
  const double left = chunked_log_sum<true>(x, i, y, xo);
  if (left == kNegInf) return kNegInf;
  const double right = chunked_log_sum<true>(x + i + 1, s.size() - i - 1, y, xo);
  return right == kNegInf ? kNegInf : left + right;
}

void ChainKernel::commit_site(EnsembleState& s, std::size_t i, double y, double new_sum) const {
  const double xo = s.positions[i];
  if (!s.interactions.empty()) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i) continue;
      s.interactions[j] += std::log(std::abs((s.positions[j] - y) / (s.positions[j] - xo)));
    }
    s.interactions[i] = new_sum;
  }
  s.positions[i] = y;
}

bool ChainKernel::admissible(const EnsembleState& s, std::size_t i, double y) const noexcept {
  if (config_.restricted) return config_.restricted->boxes[s.boxes[i]].contains(y);
  return domain_.contains(y);
}

double ChainKernel::jump_density(double y) const noexcept {
  double q = 0.0;
  if (jump_weights_[0] > 0.0 && domain_.contains(y)) q += jump_weights_[0] / domain_.length();
  if (jump_weights_[1] > 0.0 && hull_a_->contains(y)) q += jump_weights_[1] / hull_a_->length();
  if (jump_weights_[2] > 0.0) {
    const double z = (y - *config_.c0) / config_.epsilon;
    q += jump_weights_[2] * std::exp(-0.5 * z * z) / (config_.epsilon * std::sqrt(2.0 * std::numbers::pi));
  }
  return q;
}

double ChainKernel::draw_jump(Rng& rng) const {
  const double pick = rng.uniform();
  const double u = rng.uniform();
  const double g = rng.gaussian();
  if (pick < jump_weights_[0]) return uniform_on(domain_, u);
  if (pick < jump_weights_[0] + jump_weights_[1]) return hull_a_->lo + u * hull_a_->length();
  return *config_.c0 + config_.epsilon * g;
}

double ChainKernel::site_log_ratio(const EnsembleState& s, std::size_t i, double y, double& fresh) const noexcept {
  const double dv = (*fast_)(y) - (*fast_)(s.positions[i]);
  double dpair;
  if (!s.interactions.empty()) {
    fresh = site_sum(s, i, y);
    dpair = fresh == kNegInf ? kNegInf : fresh - s.interactions[i];
  } else {
    dpair = pair_delta(s, i, y);
  }
  return -field_ * dv + config_.beta * dpair;
}

double ChainKernel::move_log_ratio(const EnsembleState& s, std::size_t i, double y, bool jump) const {
  if (i >= s.size()) throw DomainError("particle index out of range");
  if (!admissible(s, i, y)) return kNegInf;
  double fresh = 0.0;
  const double dlog = site_log_ratio(s, i, y, fresh);
  if (!jump || config_.restricted) return dlog;
  return dlog + std::log(jump_density(s.positions[i])) - std::log(jump_density(y));
}

void ChainKernel::single_site(EnsembleState& s, Rng& rng, SweepStats& st) const {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double y = s.positions[i] + scales_.single * rng.gaussian();
    const double u = rng.uniform();
    ++st.single.proposed;
    if (!admissible(s, i, y)) continue;
    double fresh = 0.0;
    const double dlog = site_log_ratio(s, i, y, fresh);
    if (!(dlog > kNegInf) || !(dlog >= 0.0 || u < std::exp(dlog))) continue;
    commit_site(s, i, y, fresh);
    ++st.single.accepted;
    st.log_density_change += dlog;
  }
}

void ChainKernel::jump(EnsembleState& s, Rng& rng, SweepStats& st) const {
  const std::size_t i = std::min(s.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.size())));
  const double xo = s.positions[i];
  double y;
  double log_q_ratio = 0.0;
  if (config_.restricted) {
    const Interval& box = config_.restricted->boxes[s.boxes[i]];
    y = box.lo + rng.uniform() * box.length();
  } else {
    y = draw_jump(rng);
    log_q_ratio = std::log(jump_density(xo)) - std::log(jump_density(y));
  }
  const double u = rng.uniform();
  ++st.jump.proposed;
  if (!admissible(s, i, y)) return;
  double fresh = 0.0;
  const double dlog = site_log_ratio(s, i, y, fresh);
  const double accept = dlog + log_q_ratio;
  if (!(accept > kNegInf) || !(accept >= 0.0 || u < std::exp(accept))) return;
  commit_site(s, i, y, fresh);
  ++st.jump.accepted;
  st.log_density_change += dlog;
}

void ChainKernel::affine(EnsembleState& s, Rng& rng, SweepStats& st, bool dilation) const {
  const Interval region = *affine_region_;
  const double g = rng.gaussian();
  const double u = rng.uniform();
  std::vector<std::size_t> moved, fixed;
  for (std::size_t i = 0; i < s.size(); ++i) (region.contains(s.positions[i]) ? moved : fixed).push_back(i);
  if (moved.empty() || (dilation && moved.size() < 2)) return;
  MoveCounts& counts = dilation ? st.dilate : st.translate;
  ++counts.proposed;

  double centre = 0.0;
  for (std::size_t i : moved) centre += s.positions[i];
  centre /= static_cast<double>(moved.size());
  const double log_b = dilation ? scales_.dilate * g : 0.0;
  const double b = std::exp(log_b);
  const double shift = dilation ? 0.0 : scales_.translate * g;

  std::vector<double> next(moved.size());
  double dv = 0.0;
  for (std::size_t k = 0; k < moved.size(); ++k) {
    const double xo = s.positions[moved[k]];
    const double y = dilation ? centre + b * (xo - centre) : xo + shift;
    if (!region.contains(y) || !domain_.contains(y)) return;
    next[k] = y;
    dv += (*fast_)(y) - (*fast_)(xo);
  }
  const double m = static_cast<double>(moved.size());
  double dpair = dilation ? 0.5 * m * (m - 1.0) * log_b : 0.0;
  for (std::size_t k = 0; k < moved.size(); ++k) {
    const double xo = s.positions[moved[k]];
    for (std::size_t j : fixed) dpair += std::log(std::abs((next[k] - s.positions[j]) / (xo - s.positions[j])));
  }
  const double dlog = -field_ * dv + config_.beta * dpair;
  const double accept = dlog + (dilation ? m * log_b : 0.0);
  if (!std::isfinite(accept) || !(accept >= 0.0 || u < std::exp(accept))) return;
  for (std::size_t k = 0; k < moved.size(); ++k) s.positions[moved[k]] = next[k];
  if (!s.interactions.empty()) refresh_cache(s);
  ++counts.accepted;
  st.log_density_change += dlog;
}

SweepStats ChainKernel::sweep(EnsembleState& state, Rng& rng) const {
  SweepStats st;
  if (config_.proposal_scale == 0.0) return st;
  single_site(state, rng, st);
  if (jump_rate_ > 0.0) {
    const double whole = std::floor(jump_rate_);
    const std::size_t count = static_cast<std::size_t>(whole) + (rng.uniform() < jump_rate_ - whole ? 1 : 0);
    for (std::size_t k = 0; k < count; ++k) jump(state, rng, st);
  }
  if (affine_region_) {
    affine(state, rng, st, false);
    affine(state, rng, st, true);
  }
  return st;
}

ObservableRecord ChainKernel::observe(const EnsembleState& state, std::size_t sweep, double log_density,
                                      const SweepStats& stats) const {
  ObservableRecord rec;
  rec.sweep = sweep;
  rec.log_density = log_density;
  rec.acceptance = stats.single.rate();
  for (double x : state.positions) {
    if (!config_.neighborhood.empty() && !in_open_union(config_.neighborhood, x)) ++rec.escape_count;
    if (config_.c0 && std::abs(x - *config_.c0) < config_.epsilon) ++rec.near_count;
  }
  return rec;
}

SweepStats mcmc_sweep(EnsembleState& state, const ChainKernel& kernel, Rng& rng) { return kernel.sweep(state, rng); }

namespace {

nlohmann::json counts_json(const MoveCounts& m) { return {m.proposed, m.accepted}; }
MoveCounts counts_from(const nlohmann::json& j) { return {j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint64_t>()}; }

}  // namespace

std::string Checkpoint::serialize() const {
  nlohmann::json j;
  j["positions"] = state.positions;
  j["interactions"] = state.interactions;
  j["boxes"] = state.boxes;
  j["seed"] = state.seed;
  j["rng"] = rng;
  j["scales"] = {scales.single, scales.translate, scales.dilate};
  j["sweep"] = sweep;
  j["log_density"] = log_density;
  j["window"] = {counts_json(window.single), counts_json(window.jump), counts_json(window.translate),
                 counts_json(window.dilate)};
  return j.dump();
}

Checkpoint Checkpoint::deserialize(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Checkpoint c;
    c.state.positions = j.at("positions").get<std::vector<double>>();
    c.state.interactions = j.at("interactions").get<std::vector<double>>();
    c.state.boxes = j.at("boxes").get<std::vector<std::uint32_t>>();
    c.state.seed = j.at("seed").get<std::uint64_t>();
    c.rng = j.at("rng").get<std::string>();
    const auto& sc = j.at("scales");
    c.scales = {sc.at(0).get<double>(), sc.at(1).get<double>(), sc.at(2).get<double>()};
    c.sweep = j.at("sweep").get<std::size_t>();
    c.log_density = j.at("log_density").get<double>();
    const auto& w = j.at("window");
    c.window.single = counts_from(w.at(0));
    c.window.jump = counts_from(w.at(1));
    c.window.translate = counts_from(w.at(2));
    c.window.dilate = counts_from(w.at(3));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

ChainResult run_chain_full(const ChainConfig& config, const ChainObserver& observer, const Checkpoint* resume,
                           std::size_t stop_after) {
  if (config.steps == 0) throw ConfigError("steps must be positive");
  if (config.thinning == 0) throw ConfigError("thinning must be positive");
  ChainKernel kernel(config);
  Rng rng(config.seed);
  ChainResult out;
  EnsembleState state;
  std::size_t sweep = 0;
  double logd = 0.0;
  SweepStats window;
  if (resume) {
    state = resume->state;
    if (state.size() != config.n) throw ConfigError("checkpoint holds a different number of particles");
    rng = Rng::deserialize(resume->rng);
    kernel.set_scales(resume->scales);
    sweep = resume->sweep;
    logd = resume->log_density;
    window = resume->window;
  } else {
    state = kernel.initial_state();
    logd = kernel.log_density(state);
  }

  auto adapt = [&](double scale, const MoveCounts& m) {
    if (m.proposed == 0) return scale;
    return std::clamp(scale * std::exp(m.rate() - config.target_acceptance), 1e-8, 1e3);
  };

  const std::size_t total = config.burn_in + config.steps;
  out.records.reserve(config.steps / config.thinning);
  while (sweep < total) {
    const SweepStats st = kernel.sweep(state, rng);
    ++sweep;
    logd += st.log_density_change;
    out.totals += st;
    if (config.resync_interval > 0 && sweep % config.resync_interval == 0) logd = kernel.log_density(state);
    if (sweep <= config.burn_in) {
      window += st;
      if (config.tune && config.proposal_scale != 0.0 && sweep % kTuneWindow == 0) {
        ProposalScales s = kernel.scales();
        s.single = adapt(s.single, window.single);
        s.translate = adapt(s.translate, window.translate);
        s.dilate = adapt(s.dilate, window.dilate);
        kernel.set_scales(s);
        window = {};
      }
    } else if ((sweep - config.burn_in) % config.thinning == 0) {
      const ObservableRecord rec = kernel.observe(state, sweep, logd, st);
      out.records.push_back(rec);
      if (observer) observer(state, rec);
    }
    if (stop_after != 0 && sweep >= stop_after) break;
  }
  out.scales = kernel.scales();
  out.checkpoint = {state, rng.serialize(), kernel.scales(), sweep, logd, window};
  out.final_state = std::move(state);
  return out;
}

std::vector<ObservableRecord> run_chain(const ChainConfig& config) { return run_chain_full(config).records; }

std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e) {
  const std::size_t n = d.size();
  if (n == 0) return d;
  if (e.size() + 1 != n) throw DomainError("off-diagonal must have n - 1 entries");
  e.push_back(0.0);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iter > 64) throw Error("tridiagonal QL did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::size_t i = m; i-- > l;) {
          const double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

std::vector<double> tridiagonal_sample(std::size_t n, double beta, Rng& rng) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (n == 0) return {};
  const double scale = 1.0 / std::sqrt(static_cast<double>(n) * beta);
  std::vector<double> diag(n), off(n - 1);
  for (std::size_t k = 0; k < n; ++k) diag[k] = scale * rng.gaussian();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::chi_squared_distribution<double> chi2(beta * static_cast<double>(n - 1 - k));
    off[k] = scale * std::sqrt(0.5 * chi2(rng.engine));
  }
  return tridiagonal_eigenvalues(std::move(diag), std::move(off));
}

MeanEstimate estimate_correlator(std::span<const EnsembleState> samples, double x, const Neighborhood& a,
                                 double margin) {
  if (in_closed_union(a, x) || distance_to(a, x) < margin)
    throw MarginError("correlator point " + std::to_string(x) + " is within the margin of A");
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& s : samples) {
    double acc = 0.0;
    for (double lam : s.positions) acc += 1.0 / (x - lam);
    values.push_back(acc);
  }
  return estimate_mean(values);
}

}  // namespace betagas
