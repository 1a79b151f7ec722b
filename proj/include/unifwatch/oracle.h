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

#ifndef UNIFWATCH_ORACLE_H_
#define UNIFWATCH_ORACLE_H_

// Slow, extended-precision reference computations. Nothing here is used by
// the testers themselves; tests and the `oracle` command compare against it.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "unifwatch/distances.h"
#include "unifwatch/rng.h"

namespace unifwatch {

// Both Poi(mu) and the mixture put at most `tail_bound` mass above `cutoff`.
struct TruncationWindow {
  std::int64_t cutoff = 0;
  double tail_bound = 0.0;
};

struct ExactDistance {
  double value = 0.0;
  // |value - true distance| <= error_bound <= tol.
  double error_bound = 0.0;
  TruncationWindow window;
};

// Sums in long double with Neumaier compensation up to a cutoff where both
// tails are below tol/4. Rates above 5000 are rejected.
ExactDistance exact_hellinger_poisson_vs_mixture(double mu, const PoissonMixture& mix,
                                                 double tol);
ExactDistance exact_tv_poisson_vs_mixture(double mu, const PoissonMixture& mix, double tol);

struct BestInterval {
  std::int64_t a = 0;
  std::int64_t b = 0;
  double value = 0.0;
};

// max over 0 <= a <= b <= x_max of H^2(Ber(q(I)), Ber(p(I))), p = Poi(mu),
// q = mixture. Ties go to the lexicographically smallest (a, b).
BestInterval best_interval(double mu, const PoissonMixture& mix, std::int64_t x_max);

enum class ThresholdShape { kFull, kEmpty, kInterval, kComplementInterval };

constexpr std::string_view to_string(ThresholdShape shape) {
  switch (shape) {
    case ThresholdShape::kFull:
      return "full";
    case ThresholdShape::kEmpty:
      return "empty";
    case ThresholdShape::kInterval:
      return "interval";
    case ThresholdShape::kComplementInterval:
      return "complement-interval";
  }
  return "unknown";
}

// S = {x <= X : q(x)/p(x) >= r}. For kInterval, S = [a, b]; for
// kComplementInterval, [0, X] \ S = [a, b].
struct ThresholdSet {
  ThresholdShape shape = ThresholdShape::kEmpty;
  std::int64_t a = 0;
  std::int64_t b = 0;
};

class StructureViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requires mu > 0, r >= 0, and X past the point where the ratio turns
// monotone: either every rate is <= mu or the log ratio does not decrease
// from X to X+1. Throws StructureViolation if S is neither form.
ThresholdSet threshold_set_structure(double mu, const PoissonMixture& mix, double r,
                                     std::int64_t X);

// TV(p^m, q^m) by enumerating all |domain|^m tuples; |domain|^m <= 1e7.
double brute_force_tv_product(const DiscreteDistribution& p, const DiscreteDistribution& q,
                              std::int64_t m);

// ceil(1 / H^2(Poi(mu), mix)): a constant-factor proxy for the number of
// samples needed to tell the two apart. Throws std::domain_error when the
// distance is indistinguishable from zero.
std::int64_t estimate_opt_samples(double mu, const PoissonMixture& mix);

struct CalibrationInstance {
  double mu = 0.0;
  std::vector<double> rates;
  double eps = 0.0;
  std::int64_t x_max = 0;
  BestInterval best;
  // eps / (best * ln(4/eps)).
  double constant = 0.0;
};

struct Calibration {
  std::uint64_t seed = 0;
  std::vector<CalibrationInstance> instances;
  double constant = 0.0;
};

// Random Poisson-vs-mixture corpus: mu uniform in (0.5, 30), 1 to 4 rates
// uniform in [0, 40]. x_max follows derive_interval_params at delta 0.1.
std::vector<CalibrationInstance> calibration_corpus(std::uint64_t seed, std::int64_t count);

// Largest eps / (best_interval * ln(4/eps)) over the corpus.
Calibration calibrate_interval_constant(std::uint64_t seed, std::int64_t count);

// A statistically certified lower bound on TV(Poi(mu)^n, Perm(Poi(l_i))).
// Picks the best threshold event among permutation-invariant statistics on
// one half of the draws and evaluates it on the other half, minus a
// Hoeffding margin holding with probability 1 - failure_probability.
struct TvLowerBound {
  double lower_bound = 0.0;
  double gap = 0.0;
  double margin = 0.0;
  std::string statistic;
  double threshold = 0.0;
  std::int64_t draws_per_half = 0;
};

TvLowerBound perm_poisson_tv_lower_bound(double mu, std::span<const double> rates,
                                         std::int64_t draws_per_half, const Rng& rng,
                                         double failure_probability = 1e-3);

}  // namespace unifwatch

#endif  // UNIFWATCH_ORACLE_H_
