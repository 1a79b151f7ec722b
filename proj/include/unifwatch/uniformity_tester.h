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

#ifndef UNIFWATCH_UNIFORMITY_TESTER_H_
#define UNIFWATCH_UNIFORMITY_TESTER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

#include "unifwatch/full_tester.h"
#include "unifwatch/poisson.h"
#include "unifwatch/rng.h"
#include "unifwatch/verdict.h"

namespace unifwatch {

enum class Branch { kCollision, kPoissonized };

constexpr std::string_view to_string(Branch branch) {
  return branch == Branch::kCollision ? "collision" : "poissonized";
}

class StreamExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tests p = uniform over [n] against every p with opt(p) <= m.
struct UniformityTestConfig {
  std::int64_t n = 2;
  std::int64_t m = 1;
  double delta = 0.1;
  double group_factor = 48.0;
  FullConstants constants;
  FullOverrides overrides;
};

void validate(const UniformityTestConfig& config);

struct SampleBudgetReport {
  std::int64_t samples_requested = 0;
  std::int64_t samples_consumed = 0;
  Branch branch = Branch::kCollision;
};

struct UniformityResult {
  Verdict verdict;
  SampleBudgetReport report;
};

// m <= sqrt(n) / 2, evaluated exactly as 4 m^2 <= n.
bool uses_collision_branch(std::int64_t n, std::int64_t m);

// Smallest odd integer >= factor * ln(2 / delta).
std::int64_t collision_group_count(double delta, double factor = 48.0);

// One planned run of the tester. Construction fixes the branch and draws
// the Poissonized sample size, so sample_target() is known before any
// sample is read.
class UniformityTest {
 public:
  UniformityTest(const UniformityTestConfig& config, const Rng& rng);

  Branch branch() const { return branch_; }
  std::int64_t sample_target() const { return target_; }
  // The Poisson sample size overshot its hard cap; resolve() reads nothing.
  bool budget_exceeded() const { return budget_exceeded_; }
  std::int64_t groups() const { return groups_; }
  std::int64_t poisson_draw() const { return poisson_draw_; }
  std::int64_t sample_cap() const { return cap_; }
  const std::optional<FullTesterParams>& full_params() const { return full_params_; }

  // `samples` must hold exactly sample_target() symbols in [1, n].
  UniformityResult resolve(std::span<const Symbol> samples,
                           FullScanStats* stats = nullptr) const;

 private:
  UniformityTestConfig config_;
  Rng rng_;
  Branch branch_;
  std::int64_t target_ = 0;
  std::int64_t groups_ = 0;
  std::int64_t poisson_draw_ = 0;
  std::int64_t cap_ = 0;
  bool budget_exceeded_ = false;
  std::optional<FullTesterParams> full_params_;
};

// Pulls sample_target() symbols from `stream` and resolves.
UniformityResult test_uniformity(const UniformityTestConfig& config, SampleStream& stream,
                                 const Rng& rng);

// Majority vote over g groups of m samples: reject iff more than g/2 groups
// contain a repeated symbol. Requires 4 m^2 <= n.
UniformityResult collision_group_test(std::int64_t n, std::int64_t m, double delta,
                                      SampleStream& stream);

// sum_i C(f_i, 2) / C(m, 2) over the first m samples.
double pairwise_collision_fraction(std::span<const Symbol> samples, std::int64_t n);

// Accepts iff the pairwise collision fraction is at most 1/n + 2/(m sqrt n).
Verdict collision_count_baseline(std::int64_t n, std::int64_t m, SampleStream& stream);

}  // namespace unifwatch

#endif  // UNIFWATCH_UNIFORMITY_TESTER_H_
