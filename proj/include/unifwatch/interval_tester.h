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

#ifndef UNIFWATCH_INTERVAL_TESTER_H_
#define UNIFWATCH_INTERVAL_TESTER_H_

#include <cstdint>
#include <span>

#include "unifwatch/verdict.h"

namespace unifwatch {

// Distinguishes i.i.d. draws of a known Poi(mu) from draws of an unknown
// Poisson mixture by scanning every interval [a, b] within [0, x_max].
struct IntervalTesterParams {
  double mu = 0.0;
  double tau = 0.0;
  std::int64_t x_max = 0;
  std::int64_t m = 1;
};

// Multipliers in the default parameter formulas.
struct IntervalConstants {
  double tau_divisor = 64.0;
  double sample_factor = 8.0;
  double tail_factor = 6.0;
  double tail_budget_divisor = 200.0;
};

// x_max = ceil(2 mu + 6 ln(200 ln(4/eps) / eps)) + 1,
// tau = eps / (64 ln(4/eps)),
// m = ceil(8 ln(8 (x_max+1)^2 / delta) / tau).
IntervalTesterParams derive_interval_params(double mu, double eps, double delta,
                                            const IntervalConstants& constants = {});

// Throws std::invalid_argument unless tau in (0, 2], x_max >= 0, m >= 1.
void validate(const IntervalTesterParams& params);

struct ScanStats {
  std::int64_t intervals_checked = 0;
  std::int64_t samples_binned = 0;
};

// Rejects at the lexicographically first (a, b) with
// H^2(Ber(mu_I), Ber(est_I)) >= tau. Samples above x_max count towards m
// but fall in no interval.
Verdict run_interval_tester(const IntervalTesterParams& params,
                            std::span<const std::int64_t> samples, ScanStats* stats = nullptr);

}  // namespace unifwatch

#endif  // UNIFWATCH_INTERVAL_TESTER_H_
