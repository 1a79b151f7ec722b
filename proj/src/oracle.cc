// Copyright 2026 The Unifwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "unifwatch/oracle.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>

#include "unifwatch/interval_tester.h"
#include "unifwatch/poisson.h"

namespace unifwatch {
namespace {

using Real = long double;

constexpr double kMaxRate = 5000.0;

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(Real x) {
    const Real t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  Real value() const { return sum_ + carry_; }

 private:
  Real sum_ = 0;
  Real carry_ = 0;
};

void check_oracle_rate(double rate) {
  if (!(rate >= 0.0) || rate > kMaxRate) {
    throw std::invalid_argument("oracle: rates must lie in [0, 5000]");
  }
}

// Poi(rate)(x) for x = 0..cutoff via p(x) = p(x-1) rate / x.
std::vector<Real> pmf_table(double rate, std::int64_t cutoff) {
  std::vector<Real> p(static_cast<std::size_t>(cutoff) + 1, 0);
  const Real lambda = rate;
  p[0] = std::exp(-lambda);
  for (std::size_t x = 1; x < p.size(); ++x) p[x] = p[x - 1] * lambda / static_cast<Real>(x);
  return p;
}

std::vector<Real> mixture_table(const PoissonMixture& mix, std::int64_t cutoff) {
  std::vector<Real> q(static_cast<std::size_t>(cutoff) + 1, 0);
  for (double rate : mix.rates()) {
    const std::vector<Real> p = pmf_table(rate, cutoff);
    for (std::size_t x = 0; x < q.size(); ++x) q[x] += p[x];
  }
  for (Real& v : q) v /= static_cast<Real>(mix.size());
  return q;
}

struct Tables {
  TruncationWindow window;
  std::vector<Real> p;
  std::vector<Real> q;
};

Tables truncated_tables(double mu, const PoissonMixture& mix, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("oracle: tol must be in (0, 1)");
  check_oracle_rate(mu);
  for (double rate : mix.rates()) check_oracle_rate(rate);
  const double top = std::max(mu, mix.max_rate());
  Tables t;
  // Pr[Poi(l) > 2l + 6 ln(1/d)] <= d for every l, with d = tol/4.
  t.window.cutoff = static_cast<std::int64_t>(std::ceil(2.0 * top + 6.0 * std::log(4.0 / tol)));
  t.window.tail_bound = tol / 4.0;
  t.p = pmf_table(mu, t.window.cutoff);
  t.q = mixture_table(mix, t.window.cutoff);
  return t;
}

Real rounding_allowance(std::size_t terms) {
  return 64 * std::numeric_limits<Real>::epsilon() * static_cast<Real>(terms + 1);
}

Real log_ratio(double mu, const PoissonMixture& mix, std::int64_t x) {
  const Real log_mu = std::log(static_cast<Real>(mu));
  const Real xs = static_cast<Real>(x);
  Real peak = -std::numeric_limits<Real>::infinity();
  std::vector<Real> terms;
  for (double rate : mix.rates()) {
    Real t;
    if (rate == 0.0) {
      t = x == 0 ? static_cast<Real>(mu) : -std::numeric_limits<Real>::infinity();
    } else {
      t = static_cast<Real>(mu) - rate + xs * (std::log(static_cast<Real>(rate)) - log_mu);
    }
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  if (std::isinf(peak)) return peak;
  Real acc = 0;
  for (Real t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc) - std::log(static_cast<Real>(mix.size()));
}

// Indicator statistics used by the TV lower bound.
constexpr std::array<std::string_view, 3> kStatistics = {"max", "zeros", "sum-of-squares"};

std::array<double, 3> statistics(const std::vector<std::int64_t>& counts) {
  std::int64_t top = 0;
  std::int64_t zeros = 0;
  double squares = 0.0;
  for (std::int64_t c : counts) {
    top = std::max(top, c);
    if (c == 0) ++zeros;
    squares += static_cast<double>(c) * static_cast<double>(c);
  }
  return {static_cast<double>(top), static_cast<double>(zeros), squares};
}

std::vector<std::array<double, 3>> draw_statistics(double mu, std::span<const double> rates,
                                                   bool alternative, std::int64_t draws,
                                                   Rng rng) {
  std::vector<std::array<double, 3>> out;
  out.reserve(static_cast<std::size_t>(draws));
  std::vector<std::int64_t> counts(rates.size());
  for (std::int64_t d = 0; d < draws; ++d) {
    if (alternative) {
      counts = sample_perm_poisson(rates, rng).counts();
    } else {
      for (auto& c : counts) c = sample_poisson(mu, rng);
    }
    out.push_back(statistics(counts));
  }
  return out;
}

// Fraction of values <= t.
double cdf_at(const std::vector<double>& sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

}  // namespace

ExactDistance exact_hellinger_poisson_vs_mixture(double mu, const PoissonMixture& mix,
                                                 double tol) {
  const Tables t = truncated_tables(mu, mix, tol);
  CompensatedSum sum;
  for (std::size_t x = 0; x < t.p.size(); ++x) {
    const Real d = std::sqrt(t.p[x]) - std::sqrt(t.q[x]);
    sum.add(d * d);
  }
  ExactDistance out;
  out.window = t.window;
  // The omitted terms add at most the two tail masses.
  out.error_bound = static_cast<double>(2 * static_cast<Real>(t.window.tail_bound) +
                                        rounding_allowance(t.p.size()));
  out.value = static_cast<double>(std::clamp(sum.value(), Real(0), Real(2)));
  return out;
}

ExactDistance exact_tv_poisson_vs_mixture(double mu, const PoissonMixture& mix, double tol) {
  const Tables t = truncated_tables(mu, mix, tol);
  CompensatedSum sum;
  for (std::size_t x = 0; x < t.p.size(); ++x) sum.add(std::fabs(t.p[x] - t.q[x]));
  ExactDistance out;
  out.window = t.window;
  out.error_bound = static_cast<double>(static_cast<Real>(t.window.tail_bound) +
                                        rounding_allowance(t.p.size()));
  out.value = static_cast<double>(std::clamp(sum.value() / 2, Real(0), Real(1)));
  return out;
}

BestInterval best_interval(double mu, const PoissonMixture& mix, std::int64_t x_max) {
  if (x_max < 0) throw std::invalid_argument("best_interval: x_max must be >= 0");
  check_oracle_rate(mu);
  for (double rate : mix.rates()) check_oracle_rate(rate);
  const std::vector<Real> p = pmf_table(mu, x_max);
  const std::vector<Real> q = mixture_table(mix, x_max);
  BestInterval best;
  Real best_value = -1;
  for (std::int64_t a = 0; a <= x_max; ++a) {
    CompensatedSum p_mass;
    CompensatedSum q_mass;
    for (std::int64_t b = a; b <= x_max; ++b) {
      p_mass.add(p[static_cast<std::size_t>(b)]);
      q_mass.add(q[static_cast<std::size_t>(b)]);
      const Real v = hellinger_sq_bernoulli(std::clamp(q_mass.value(), Real(0), Real(1)),
                                            std::clamp(p_mass.value(), Real(0), Real(1)));
      if (v > best_value) {
        best_value = v;
        best = {a, b, static_cast<double>(v)};
      }
    }
  }
  return best;
}

ThresholdSet threshold_set_structure(double mu, const PoissonMixture& mix, double r,
                                     std::int64_t X) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("threshold_set_structure: mu must be positive");
  }
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("threshold_set_structure: r must be finite and >= 0");
  }
  if (X < 0) throw std::invalid_argument("threshold_set_structure: X must be >= 0");
  if (mix.max_rate() > mu && log_ratio(mu, mix, X + 1) < log_ratio(mu, mix, X)) {
    throw std::invalid_argument("threshold_set_structure: ratio still decreasing at X");
  }
  const Real log_r = r == 0.0 ? -std::numeric_limits<Real>::infinity()
                              : std::log(static_cast<Real>(r));
  std::vector<bool> in_set(static_cast<std::size_t>(X) + 1);
  for (std::int64_t x = 0; x <= X; ++x) {
    in_set[static_cast<std::size_t>(x)] = log_ratio(mu, mix, x) >= log_r;
  }
  const auto count = std::count(in_set.begin(), in_set.end(), true);
  if (count == static_cast<std::ptrdiff_t>(in_set.size())) return {ThresholdShape::kFull, 0, X};
  if (count == 0) return {ThresholdShape::kEmpty, 0, X};

  const auto contiguous = [&](bool value) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
    const auto first = std::find(in_set.begin(), in_set.end(), value) - in_set.begin();
    const auto last = static_cast<std::ptrdiff_t>(in_set.size()) - 1 -
                      (std::find(in_set.rbegin(), in_set.rend(), value) - in_set.rbegin());
    for (auto x = first; x <= last; ++x) {
      if (in_set[static_cast<std::size_t>(x)] != value) return std::nullopt;
    }
    return std::make_pair(static_cast<std::int64_t>(first), static_cast<std::int64_t>(last));
  };
  if (const auto span = contiguous(true)) return {ThresholdShape::kInterval, span->first, span->second};
  if (const auto span = contiguous(false)) {
    return {ThresholdShape::kComplementInterval, span->first, span->second};
  }
  throw StructureViolation("threshold set is neither an interval nor the complement of one");
}

double brute_force_tv_product(const DiscreteDistribution& p, const DiscreteDistribution& q,
                              std::int64_t m) {
  if (p.size() != q.size()) throw std::invalid_argument("brute_force_tv_product: domain mismatch");
  if (m < 1) throw std::invalid_argument("brute_force_tv_product: m must be >= 1");
  const auto n = static_cast<std::size_t>(p.size());
  if (static_cast<double>(m) * std::log10(static_cast<double>(n)) > 7.0 + 1e-12) {
    throw std::invalid_argument("brute_force_tv_product: more than 1e7 tuples");
  }
  const auto depth = static_cast<std::size_t>(m);
  // Running products along the current tuple prefix.
  std::vector<Real> pp(depth + 1, 1);
  std::vector<Real> qq(depth + 1, 1);
  std::vector<std::size_t> digit(depth, 0);
  CompensatedSum sum;
  std::size_t level = 0;
  while (true) {
    if (level == depth) {
      sum.add(std::fabs(pp[depth] - qq[depth]));
      // Odometer step back to the deepest digit that can advance.
      while (level > 0 && digit[level - 1] + 1 == n) {
        digit[level - 1] = 0;
        --level;
      }
      if (level == 0) break;
      ++digit[level - 1];
      --level;
    }
    const auto i = static_cast<Eigen::Index>(digit[level]);
    pp[level + 1] = pp[level] * static_cast<Real>(p[i]);
    qq[level + 1] = qq[level] * static_cast<Real>(q[i]);
    ++level;
  }
  return static_cast<double>(sum.value() / 2);
}

std::int64_t estimate_opt_samples(double mu, const PoissonMixture& mix) {
  constexpr double kTol = 1e-12;
  const ExactDistance h = exact_hellinger_poisson_vs_mixture(mu, mix, kTol);
  if (h.value <= h.error_bound) {
    throw std::domain_error("estimate_opt_samples: distributions are indistinguishable");
  }
  return static_cast<std::int64_t>(std::ceil(1.0 / h.value));
}

std::vector<CalibrationInstance> calibration_corpus(std::uint64_t seed, std::int64_t count) {
  if (count < 1) throw std::invalid_argument("calibration_corpus: count must be >= 1");
  const Rng root(seed);
  std::vector<CalibrationInstance> corpus;
  for (std::int64_t i = 0; i < count; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    CalibrationInstance inst;
    // Redraw the rare instance whose mixture is numerically Poi(mu).
    do {
      inst.mu = 0.5 + 29.5 * (1.0 - rng.uniform01());
      inst.rates.assign(1 + rng.uniform_below(4), 0.0);
      for (double& rate : inst.rates) rate = 40.0 * rng.uniform01();
      inst.eps = exact_hellinger_poisson_vs_mixture(inst.mu, PoissonMixture(inst.rates), 1e-12).value;
    } while (inst.eps < 1e-9);
    const PoissonMixture mix(inst.rates);
    inst.x_max = derive_interval_params(inst.mu, std::min(inst.eps, 2.0), 0.1).x_max;
    inst.best = best_interval(inst.mu, mix, inst.x_max);
    inst.constant = inst.eps / (inst.best.value * std::log(4.0 / inst.eps));
    corpus.push_back(std::move(inst));
  }
  return corpus;
}

Calibration calibrate_interval_constant(std::uint64_t seed, std::int64_t count) {
  Calibration out;
  out.seed = seed;
  out.instances = calibration_corpus(seed, count);
  for (const auto& inst : out.instances) out.constant = std::max(out.constant, inst.constant);
  return out;
}

TvLowerBound perm_poisson_tv_lower_bound(double mu, std::span<const double> rates,
                                         std::int64_t draws_per_half, const Rng& rng,
                                         double failure_probability) {
  if (rates.empty()) throw std::invalid_argument("tv lower bound: needs at least one rate");
  if (draws_per_half < 1) throw std::invalid_argument("tv lower bound: draws must be >= 1");
  if (!(failure_probability > 0.0 && failure_probability < 1.0)) {
    throw std::invalid_argument("tv lower bound: failure probability must be in (0, 1)");
  }
  const auto fit_null = draw_statistics(mu, rates, false, draws_per_half, rng.child(0));
  const auto fit_alt = draw_statistics(mu, rates, true, draws_per_half, rng.child(1));
  const auto eval_null = draw_statistics(mu, rates, false, draws_per_half, rng.child(2));
  const auto eval_alt = draw_statistics(mu, rates, true, draws_per_half, rng.child(3));

  // Choose the event {T <= t} (sign +1) or {T > t} (sign -1) that best
  // separates the fitting half.
  std::size_t best_stat = 0;
  double best_t = 0.0;
  double best_sign = 1.0;
  double best_gap = -1.0;
  for (std::size_t s = 0; s < kStatistics.size(); ++s) {
    std::vector<double> v0;
    std::vector<double> v1;
    for (const auto& st : fit_null) v0.push_back(st[s]);
    for (const auto& st : fit_alt) v1.push_back(st[s]);
    std::sort(v0.begin(), v0.end());
    std::sort(v1.begin(), v1.end());
    std::vector<double> candidates = v0;
    candidates.insert(candidates.end(), v1.begin(), v1.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (double t : candidates) {
      const double diff = cdf_at(v1, t) - cdf_at(v0, t);
      if (std::fabs(diff) > best_gap) {
        best_gap = std::fabs(diff);
        best_stat = s;
        best_t = t;
        best_sign = diff >= 0.0 ? 1.0 : -1.0;
      }
    }
  }
  const auto event_rate = [&](const std::vector<std::array<double, 3>>& draws) {
    std::int64_t hits = 0;
    for (const auto& st : draws) {
      const bool below = st[best_stat] <= best_t;
      if (below == (best_sign > 0.0)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(draws.size());
  };
  TvLowerBound out;
  out.statistic = std::string(kStatistics[best_stat]);
  out.threshold = best_t;
  out.draws_per_half = draws_per_half;
  out.gap = event_rate(eval_alt) - event_rate(eval_null);
  // Each of the two proportions is within sqrt(ln(4/a) / 2N) of its mean
  // except with probability a/2.
  out.margin = 2.0 * std::sqrt(std::log(4.0 / failure_probability) /
                               (2.0 * static_cast<double>(draws_per_half)));
  out.lower_bound = std::max(0.0, out.gap - out.margin);
  return out;
}

}  // namespace unifwatch
