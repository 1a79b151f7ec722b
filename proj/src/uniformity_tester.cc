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

#include "unifwatch/uniformity_tester.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace unifwatch {
namespace {

std::vector<Symbol> take(SampleStream& stream, std::int64_t count) {
  std::vector<Symbol> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const std::optional<Symbol> x = stream.next();
    if (!x) {
      throw StreamExhausted("sample stream ended after " + std::to_string(i) + " of " +
                            std::to_string(count) + " samples");
    }
    out.push_back(*x);
  }
  return out;
}

void check_symbols(std::span<const Symbol> samples, std::int64_t n) {
  for (Symbol x : samples) {
    if (x < 1 || x > n) {
      throw std::invalid_argument("symbol " + std::to_string(x) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
  }
}

Verdict collision_groups(std::span<const Symbol> samples, std::int64_t n, std::int64_t m,
                         std::int64_t groups) {
  // stamp[x] = 1 + index of the last group that saw symbol x.
  std::vector<std::int64_t> stamp(static_cast<std::size_t>(n) + 1, 0);
  std::int64_t colliding = 0;
  for (std::int64_t g = 0; g < groups; ++g) {
    bool collided = false;
    for (std::int64_t j = 0; j < m; ++j) {
      const auto x = static_cast<std::size_t>(samples[static_cast<std::size_t>(g * m + j)]);
      if (stamp[x] == g + 1) collided = true;
      stamp[x] = g + 1;
    }
    if (collided) ++colliding;
  }
  Verdict v;
  if (2 * colliding > groups) {
    v.outcome = Outcome::kReject;
    v.witness = CollisionWitness{colliding, groups, m};
  }
  return v;
}

}  // namespace

void validate(const UniformityTestConfig& config) {
  if (config.n < 2) throw std::invalid_argument("uniformity tester: n must be >= 2");
  if (config.m < 1) throw std::invalid_argument("uniformity tester: m must be >= 1");
  if (!(config.delta > 0.0 && config.delta < 1.0)) {
    throw std::invalid_argument("uniformity tester: delta must be in (0, 1)");
  }
  if (!(config.group_factor > 0.0)) {
    throw std::invalid_argument("uniformity tester: group factor must be positive");
  }
}

bool uses_collision_branch(std::int64_t n, std::int64_t m) {
  // 4 m^2 <= n without overflow: m <= sqrt(n)/2 < 2^31 for any int64 n.
  if (m > (std::int64_t{1} << 31)) return false;
  return 4 * m * m <= n;
}

std::int64_t collision_group_count(double delta, double factor) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("collision_group_count: delta must be in (0, 1)");
  }
  auto g = static_cast<std::int64_t>(std::ceil(factor * std::log(2.0 / delta)));
  if (g < 1) g = 1;
  if (g % 2 == 0) ++g;
  return g;
}

UniformityTest::UniformityTest(const UniformityTestConfig& config, const Rng& rng)
    : config_(config), rng_(rng) {
  validate(config_);
  if (uses_collision_branch(config_.n, config_.m)) {
    branch_ = Branch::kCollision;
    groups_ = collision_group_count(config_.delta, config_.group_factor);
    target_ = groups_ * config_.m;
    return;
  }
  branch_ = Branch::kPoissonized;
  const std::int64_t m_prime = std::max<std::int64_t>(2 * config_.m, 20);
  const double mu = static_cast<double>(m_prime) / static_cast<double>(config_.n);
  full_params_ =
      derive_full_params(config_.n, mu, config_.delta, config_.constants, config_.overrides);
  const double mean = static_cast<double>(full_params_->s) * static_cast<double>(m_prime);
  cap_ = static_cast<std::int64_t>(std::floor(2.0 * mean + 6.0 * std::log(2.0 / config_.delta)));
  Rng draw_rng = rng_.child(0);
  poisson_draw_ = sample_poisson(mean, draw_rng);
  budget_exceeded_ = poisson_draw_ > cap_;
  target_ = budget_exceeded_ ? 0 : poisson_draw_;
}

UniformityResult UniformityTest::resolve(std::span<const Symbol> samples,
                                         FullScanStats* stats) const {
  if (static_cast<std::int64_t>(samples.size()) != target_) {
    throw std::invalid_argument("UniformityTest::resolve: expected " + std::to_string(target_) +
                                " samples, got " + std::to_string(samples.size()));
  }
  check_symbols(samples, config_.n);
  UniformityResult result;
  result.report.branch = branch_;
  result.report.samples_consumed = target_;
  if (branch_ == Branch::kCollision) {
    result.report.samples_requested = target_;
    result.verdict = collision_groups(samples, config_.n, config_.m, groups_);
    return result;
  }
  result.report.samples_requested = poisson_draw_;
  if (budget_exceeded_) {
    result.verdict.outcome = Outcome::kBudgetExceeded;
    return result;
  }
  const FrequencyVector freq = poissonize(samples, config_.n);
  Rng perm_rng = rng_.child(1);
  const std::vector<std::size_t> perm = uniform_permutation(freq.size(), perm_rng);
  std::vector<std::int64_t> permuted(freq.size());
  for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = freq[perm[i]];
  FullRunOptions options;
  options.stats = stats;
  result.verdict =
      run_full_tester(*full_params_, FrequencyVector(std::move(permuted)), rng_.child(2), options);
  return result;
}

UniformityResult test_uniformity(const UniformityTestConfig& config, SampleStream& stream,
                                 const Rng& rng) {
  const UniformityTest test(config, rng);
  const std::vector<Symbol> samples = take(stream, test.sample_target());
  return test.resolve(samples);
}

UniformityResult collision_group_test(std::int64_t n, std::int64_t m, double delta,
                                      SampleStream& stream) {
  UniformityTestConfig config;
  config.n = n;
  config.m = m;
  config.delta = delta;
  validate(config);
  if (!uses_collision_branch(n, m)) {
    throw std::invalid_argument("collision_group_test: requires m <= sqrt(n)/2");
  }
  // The collision branch draws no randomness of its own.
  return test_uniformity(config, stream, Rng(0));
}

double pairwise_collision_fraction(std::span<const Symbol> samples, std::int64_t n) {
  const auto m = static_cast<std::int64_t>(samples.size());
  if (m < 2) throw std::invalid_argument("pairwise_collision_fraction: needs >= 2 samples");
  check_symbols(samples, n);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n) + 1, 0);
  double pairs = 0.0;
  // Each new copy of x collides with every earlier copy.
  for (Symbol x : samples) pairs += static_cast<double>(counts[static_cast<std::size_t>(x)]++);
  return pairs / (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

Verdict collision_count_baseline(std::int64_t n, std::int64_t m, SampleStream& stream) {
  if (n < 1) throw std::invalid_argument("collision_count_baseline: n must be >= 1");
  if (m < 2) throw std::invalid_argument("collision_count_baseline: m must be >= 2");
  const std::vector<Symbol> samples = take(stream, m);
  const double c = pairwise_collision_fraction(samples, n);
  const double nd = static_cast<double>(n);
  const double threshold = 1.0 / nd + 2.0 / (static_cast<double>(m) * std::sqrt(nd));
  Verdict v;
  if (c > threshold) v.outcome = Outcome::kReject;
  return v;
}

}  // namespace unifwatch
