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

#include "unifwatch/distances.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace unifwatch {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_rate(double mu, const char* what) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument(std::string(what) + ": rate must be finite and >= 0");
  }
}

}  // namespace

PoissonMixture::PoissonMixture(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw std::invalid_argument("PoissonMixture: needs at least one rate");
  for (double r : rates_) check_rate(r, "PoissonMixture");
}

double PoissonMixture::max_rate() const {
  return *std::max_element(rates_.begin(), rates_.end());
}

double mixture_pmf(const PoissonMixture& mix, std::int64_t x) {
  double total = 0.0;
  for (double rate : mix.rates()) total += poisson_pmf(rate, x);
  return total / static_cast<double>(mix.size());
}

double log_pmf_ratio(const PoissonMixture& mix, double mu, std::int64_t x) {
  check_rate(mu, "pmf_ratio");
  if (x < 0) throw std::invalid_argument("pmf_ratio: x must be >= 0");
  if (mu == 0.0) {
    if (x > 0) throw std::domain_error("pmf_ratio: Poi(0) has no mass at x > 0");
    return std::log(mixture_pmf(mix, 0));
  }
  const double log_mu = std::log(mu);
  const auto xs = static_cast<double>(x);
  std::vector<double> terms;
  terms.reserve(mix.size());
  double peak = kNegInf;
  for (double rate : mix.rates()) {
    double t;
    if (rate == 0.0) {
      t = (x == 0) ? mu : kNegInf;
    } else {
      t = mu - rate + xs * (std::log(rate) - log_mu);
    }
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  if (peak == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc) - std::log(static_cast<double>(mix.size()));
}

double pmf_ratio(const PoissonMixture& mix, double mu, std::int64_t x) {
  return std::exp(log_pmf_ratio(mix, mu, x));
}

IntervalMass poisson_interval_mass(double mu, std::int64_t a, std::int64_t b) {
  check_rate(mu, "poisson_interval_mass");
  if (a < 0 || b < a) throw std::invalid_argument("poisson_interval_mass: need 0 <= a <= b");
  double sum = 0.0;
  for (std::int64_t x = a; x <= b; ++x) {
    const double term = poisson_pmf(mu, x);
    // Past the mode a zero term means every later term underflows too.
    if (term == 0.0 && static_cast<double>(x) > mu) break;
    sum += term;
  }
  return IntervalMass{a, b, std::clamp(sum, 0.0, 1.0)};
}

IntervalMassTable::IntervalMassTable(double mu, std::int64_t x_max) : x_max_(x_max) {
  check_rate(mu, "IntervalMassTable");
  if (x_max < 0) throw std::invalid_argument("IntervalMassTable: x_max must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(x_max + 1));
  for (std::int64_t x = 0; x <= x_max; ++x) pmf[static_cast<std::size_t>(x)] = poisson_pmf(mu, x);
  const auto n = static_cast<std::size_t>(x_max + 1);
  masses_.resize(n * (n + 1) / 2);
  std::size_t pos = 0;
  for (std::int64_t a = 0; a <= x_max; ++a) {
    double sum = 0.0;
    for (std::int64_t b = a; b <= x_max; ++b) {
      sum += pmf[static_cast<std::size_t>(b)];
      masses_[pos++] = std::clamp(sum, 0.0, 1.0);
    }
  }
}

double poisson_tail_threshold(double rate, double tail_probability) {
  check_rate(rate, "poisson_tail_threshold");
  if (!(tail_probability > 0.0 && tail_probability <= 1.0)) {
    throw std::invalid_argument("poisson_tail_threshold: tail probability must be in (0,1]");
  }
  return 2.0 * rate + 6.0 * std::log(1.0 / tail_probability);
}

EliminateLargeResult eliminate_large_witness(const EliminateLargeMasses& m, double delta) {
  constexpr double kSlack = 1e-12;
  if (!(delta > 0.0)) throw std::invalid_argument("eliminate_large_witness: delta must be > 0");
  for (double v : {m.p_s, m.q_s, m.p_s_minus_t, m.q_s_minus_t, m.p_t, m.q_t}) {
    internal::check_probability(v, "eliminate_large_witness");
  }
  if (m.p_s_minus_t > m.p_s + kSlack || m.q_s_minus_t > m.q_s + kSlack ||
      m.p_s - m.p_s_minus_t > m.p_t + kSlack || m.q_s - m.q_s_minus_t > m.q_t + kSlack) {
    throw std::invalid_argument("eliminate_large_witness: inconsistent set masses");
  }
  if (hellinger_sq_bernoulli(m.p_s, m.q_s) < delta * (1.0 - kSlack)) {
    throw std::invalid_argument("eliminate_large_witness: S does not reach delta");
  }
  if (m.q_t > delta / 20.0 * (1.0 + kSlack)) {
    throw std::invalid_argument("eliminate_large_witness: q(T) exceeds delta / 20");
  }

  auto make = [](EliminateChoice choice, double p, double q) {
    p = std::clamp(p, 0.0, 1.0);
    q = std::clamp(q, 0.0, 1.0);
    return EliminateLargeResult{choice, p, q, hellinger_sq_bernoulli(p, q)};
  };
  const EliminateLargeResult minus_tail =
      make(EliminateChoice::kSetMinusTail, m.p_s_minus_t, m.q_s_minus_t);
  const EliminateLargeResult complement =
      make(EliminateChoice::kTailComplement, 1.0 - m.p_t, 1.0 - m.q_t);

  const double floor = delta / 120.0 * (1.0 - kSlack);
  // A heavy tail under p is itself the witness; otherwise removing it
  // costs little.
  const bool heavy_tail = m.p_t >= delta / 10.0;
  const EliminateLargeResult& first = heavy_tail ? complement : minus_tail;
  const EliminateLargeResult& second = heavy_tail ? minus_tail : complement;
  if (first.value >= floor) return first;
  if (second.value >= floor) return second;
  throw std::logic_error("eliminate_large_witness: neither candidate reaches delta / 120");
}

}  // namespace unifwatch
