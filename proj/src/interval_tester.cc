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

#include "unifwatch/interval_tester.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "unifwatch/distances.h"

namespace unifwatch {

IntervalTesterParams derive_interval_params(double mu, double eps, double delta,
                                            const IntervalConstants& constants) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("derive_interval_params: mu must be finite and >= 0");
  }
  if (!(eps > 0.0 && eps <= 2.0)) {
    throw std::invalid_argument("derive_interval_params: eps must be in (0, 2]");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("derive_interval_params: delta must be in (0, 1)");
  }
  const double log_term = std::log(4.0 / eps);
  IntervalTesterParams params;
  params.mu = mu;
  params.x_max = static_cast<std::int64_t>(std::ceil(
                     2.0 * mu + constants.tail_factor *
                                    std::log(constants.tail_budget_divisor * log_term / eps))) +
                 1;
  params.tau = eps / (constants.tau_divisor * log_term);
  const auto width = static_cast<double>(params.x_max + 1);
  params.m = static_cast<std::int64_t>(
      std::ceil(constants.sample_factor * std::log(8.0 * width * width / delta) / params.tau));
  validate(params);
  return params;
}

void validate(const IntervalTesterParams& params) {
  if (!(params.mu >= 0.0) || !std::isfinite(params.mu)) {
    throw std::invalid_argument("interval tester: mu must be finite and >= 0");
  }
  if (!(params.tau > 0.0 && params.tau <= 2.0)) {
    throw std::invalid_argument("interval tester: tau must be in (0, 2]");
  }
  if (params.x_max < 0) throw std::invalid_argument("interval tester: x_max must be >= 0");
  if (params.m < 1) throw std::invalid_argument("interval tester: m must be >= 1");
}

Verdict run_interval_tester(const IntervalTesterParams& params,
                            std::span<const std::int64_t> samples, ScanStats* stats) {
  validate(params);
  if (static_cast<std::int64_t>(samples.size()) != params.m) {
    throw std::invalid_argument("run_interval_tester: expected " + std::to_string(params.m) +
                                " samples, got " + std::to_string(samples.size()));
  }
  const std::int64_t x_max = params.x_max;
  // prefix[x] = #{samples < x}, for x in [0, x_max + 1].
  std::vector<std::int64_t> prefix(static_cast<std::size_t>(x_max + 2), 0);
  for (std::int64_t v : samples) {
    if (v < 0) throw std::invalid_argument("run_interval_tester: negative sample");
    if (v <= x_max) ++prefix[static_cast<std::size_t>(v + 1)];
  }
  for (std::size_t x = 1; x < prefix.size(); ++x) prefix[x] += prefix[x - 1];

  const IntervalMassTable table(params.mu, x_max);
  const auto m = static_cast<double>(params.m);
  std::int64_t checked = 0;
  Verdict verdict;
  for (std::int64_t a = 0; a <= x_max && verdict.accepted(); ++a) {
    for (std::int64_t b = a; b <= x_max; ++b) {
      ++checked;
      const double mu_i = table.mass(a, b);
      const double est_i =
          static_cast<double>(prefix[static_cast<std::size_t>(b + 1)] -
                              prefix[static_cast<std::size_t>(a)]) /
          m;
      const double h = hellinger_sq_bernoulli(mu_i, est_i);
      if (h >= params.tau) {
        verdict.outcome = Outcome::kReject;
        verdict.witness = IntervalWitness{a, b, mu_i, est_i, h, params.tau, {}, {}};
        break;
      }
    }
  }
  if (stats != nullptr) {
    stats->intervals_checked += checked;
    stats->samples_binned += static_cast<std::int64_t>(samples.size());
  }
  return verdict;
}

}  // namespace unifwatch
