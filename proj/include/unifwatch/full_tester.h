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

#ifndef UNIFWATCH_FULL_TESTER_H_
#define UNIFWATCH_FULL_TESTER_H_

#include <cstdint>
#include <optional>

#include "unifwatch/poisson.h"
#include "unifwatch/rng.h"
#include "unifwatch/verdict.h"

namespace unifwatch {

// Distinguishes Poi(s mu)^n from Perm(Poi(s l_1), ..., Poi(s l_n)).
struct FullTesterParams {
  std::int64_t n = 1;
  double mu = 0.0;
  double tau = 0.0;
  std::int64_t s = 1;
  std::int64_t r = 1;
  std::int64_t x_max = 0;
};

// Multipliers in the default parameter formulas.
struct FullConstants {
  double tail_factor = 6.0;
  double tail_budget = 20.0;
  double tau_divisor = 16.0;
  double repeat_factor = 8.0;
  double union_factor = 8.0;
};

// Replace individual derived values. s is always derived from the formula's
// own r; overriding r afterwards does not change s.
struct FullOverrides {
  std::optional<std::int64_t> x_max;
  std::optional<double> tau;
  std::optional<std::int64_t> r;
  std::optional<std::int64_t> s;
};

// With L = ln(max(n, 3)):
//   x_max = ceil(2 mu + 6 (L + ln(20/delta))), tau = 1 / (16 L^2),
//   r = ceil(8 ln(2/delta) n L), s = ceil(ln(8 (x_max+1)^2 n r / delta) / tau).
FullTesterParams derive_full_params(std::int64_t n, double mu, double delta,
                                    const FullConstants& constants = {},
                                    const FullOverrides& overrides = {});

void validate(const FullTesterParams& params);

struct FullScanStats {
  std::int64_t intervals_checked = 0;
  std::int64_t subsets_drawn = 0;
};

struct FullRunOptions {
  // Draw a fresh subset for every (k, interval, repeat) triple instead of
  // reusing permutation prefixes. Quadratically slower; tiny n only.
  bool literal_resampling = false;
  // Evaluate the statistic for every interval instead of comparing counts
  // against precomputed acceptance ranges. Same verdicts, slower.
  bool direct_scan = false;
  FullScanStats* stats = nullptr;
};

// Splits every freq[i] into s counts, then for each repeat grows a random
// subset one index at a time and rejects when some interval's pooled
// empirical mass over k indices satisfies H^2 >= tau / k. Randomness comes
// from children of `rng`; the generator itself is not advanced.
Verdict run_full_tester(const FullTesterParams& params, const FrequencyVector& freq,
                        const Rng& rng, const FullRunOptions& options = {});

}  // namespace unifwatch

#endif  // UNIFWATCH_FULL_TESTER_H_
