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
#include <vector>

#include <gtest/gtest.h>

#include "unifwatch/poisson.h"

namespace unifwatch {
namespace {

// Squared Hellinger distance between Poi(10) and the even {5, 15} mixture,
// from a 60-digit reference computation.
constexpr double kEpsStar = 0.294091124216176256573;

std::vector<std::int64_t> poisson_draws(double rate, std::int64_t m, Rng& rng) {
  std::vector<std::int64_t> xs(static_cast<std::size_t>(m));
  for (auto& x : xs) x = sample_poisson(rate, rng);
  return xs;
}

std::vector<std::int64_t> mixture_draws(std::int64_t m, Rng& rng) {
  std::vector<std::int64_t> xs(static_cast<std::size_t>(m));
  for (auto& x : xs) x = sample_poisson(rng.uniform_below(2) == 0 ? 5.0 : 15.0, rng);
  return xs;
}

TEST(DeriveIntervalParamsTest, FormulaAtEpsTwo) {
  const auto p = derive_interval_params(10.0, 2.0, 0.1);
  EXPECT_DOUBLE_EQ(p.tau, 2.0 / (64.0 * std::log(2.0)));
  const auto x_max =
      static_cast<std::int64_t>(std::ceil(20.0 + 6.0 * std::log(200.0 * std::log(2.0) / 2.0))) + 1;
  EXPECT_EQ(p.x_max, x_max);
  const double w = static_cast<double>(x_max + 1);
  EXPECT_EQ(p.m, static_cast<std::int64_t>(std::ceil(8.0 * std::log(8.0 * w * w / 0.1) / p.tau)));
  EXPECT_EQ(p.mu, 10.0);
}

TEST(DeriveIntervalParamsTest, PinnedSeparation) {
  const auto p = derive_interval_params(10.0, kEpsStar, 0.1);
  EXPECT_NEAR(p.tau, 0.0017605, 1e-7);
  EXPECT_EQ(p.x_max, 66);
  EXPECT_EQ(p.m, 58127);
}

TEST(DeriveIntervalParamsTest, HalvingEpsNeverDecreasesM) {
  for (double mu : {0.0, 1.0, 10.0, 100.0}) {
    double eps = 2.0;
    std::int64_t prev = 0;
    for (int i = 0; i < 20; ++i, eps /= 2) {
      const auto p = derive_interval_params(mu, eps, 0.05);
      EXPECT_GE(p.m, prev);
      prev = p.m;
    }
  }
}

TEST(DeriveIntervalParamsTest, RejectsBadArguments) {
  EXPECT_THROW(derive_interval_params(1.0, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(derive_interval_params(1.0, 2.5, 0.1), std::invalid_argument);
  EXPECT_THROW(derive_interval_params(1.0, 0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(derive_interval_params(1.0, 0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(derive_interval_params(-1.0, 0.5, 0.1), std::invalid_argument);
}

TEST(DeriveIntervalParamsTest, ConstantsAreOverridable) {
  IntervalConstants c;
  c.tau_divisor = 32.0;
  const auto a = derive_interval_params(3.0, 0.5, 0.1);
  const auto b = derive_interval_params(3.0, 0.5, 0.1, c);
  EXPECT_DOUBLE_EQ(b.tau, 2.0 * a.tau);
  EXPECT_LT(b.m, a.m);
}

TEST(RunIntervalTesterTest, SampleCountMismatch) {
  const IntervalTesterParams p{1.0, 0.1, 5, 10};
  const std::vector<std::int64_t> xs(9, 1);
  EXPECT_THROW(run_interval_tester(p, xs), std::invalid_argument);
}

TEST(RunIntervalTesterTest, NegativeSample) {
  const IntervalTesterParams p{1.0, 0.1, 5, 2};
  const std::vector<std::int64_t> xs = {1, -1};
  EXPECT_THROW(run_interval_tester(p, xs), std::invalid_argument);
}

TEST(RunIntervalTesterTest, InvalidParams) {
  const std::vector<std::int64_t> xs = {1};
  EXPECT_THROW(run_interval_tester({1.0, 0.0, 5, 1}, xs), std::invalid_argument);
  EXPECT_THROW(run_interval_tester({1.0, 2.5, 5, 1}, xs), std::invalid_argument);
  EXPECT_THROW(run_interval_tester({1.0, 0.1, -1, 1}, xs), std::invalid_argument);
}

TEST(RunIntervalTesterTest, AllZerosRejectsAtZero) {
  const auto p = derive_interval_params(10.0, 1.0, 0.1);
  const std::vector<std::int64_t> xs(static_cast<std::size_t>(p.m), 0);
  const Verdict v = run_interval_tester(p, xs);
  ASSERT_TRUE(v.rejected());
  ASSERT_TRUE(v.witness.has_value());
  const auto& w = std::get<IntervalWitness>(*v.witness);
  EXPECT_EQ(w.a, 0);
  EXPECT_EQ(w.b, 0);
  EXPECT_DOUBLE_EQ(w.est_interval, 1.0);
  EXPECT_NEAR(w.mu_interval, 4.54e-5, 1e-7);
  EXPECT_GE(w.hellinger, p.tau);
  EXPECT_EQ(w.threshold, p.tau);
}

TEST(RunIntervalTesterTest, SamplesAboveCeilingFallOutside) {
  // Every sample above x_max: each interval sees zero empirical mass, so
  // the rejection happens where the null mass is large.
  const IntervalTesterParams p{10.0, 0.05, 30, 1000};
  const std::vector<std::int64_t> xs(1000, 31);
  const Verdict v = run_interval_tester(p, xs);
  ASSERT_TRUE(v.rejected());
  const auto& w = std::get<IntervalWitness>(*v.witness);
  EXPECT_EQ(w.est_interval, 0.0);
  EXPECT_EQ(w.a, 0);
}

TEST(RunIntervalTesterTest, AcceptedVerdictHasNoWitness) {
  Rng rng(1);
  const auto p = derive_interval_params(4.0, 1.0, 0.1);
  const Verdict v = run_interval_tester(p, poisson_draws(4.0, p.m, rng));
  EXPECT_TRUE(v.accepted());
  EXPECT_FALSE(v.witness.has_value());
}

TEST(RunIntervalTesterTest, FirstOffendingIntervalIsLexicographic) {
  // Half the samples at 3: the singleton [0,0] is fine under Poi(3) ...
  const IntervalTesterParams p{3.0, 0.05, 10, 100};
  std::vector<std::int64_t> xs(100, 3);
  const Verdict v = run_interval_tester(p, xs);
  ASSERT_TRUE(v.rejected());
  const auto& w = std::get<IntervalWitness>(*v.witness);
  // ... but [0,0] with est 0 vs mass e^-3 = 0.0498 already exceeds 0.05.
  EXPECT_EQ(w.a, 0);
  EXPECT_EQ(w.b, 0);
}

TEST(RunIntervalTesterTest, Deterministic) {
  Rng rng(2);
  const auto p = derive_interval_params(6.0, 0.8, 0.1);
  const auto xs = mixture_draws(p.m, rng);
  EXPECT_EQ(run_interval_tester(p, xs), run_interval_tester(p, xs));
}

TEST(RunIntervalTesterTest, OperationCountAtCeiling500) {
  // tau = 2 cannot be reached, so the scan visits every interval.
  const IntervalTesterParams p{200.0, 2.0, 500, 5000};
  Rng rng(3);
  const auto xs = poisson_draws(200.0, p.m, rng);
  ScanStats stats;
  EXPECT_TRUE(run_interval_tester(p, xs, &stats).accepted());
  EXPECT_EQ(stats.intervals_checked, 501 * 502 / 2);
  EXPECT_EQ(stats.samples_binned, 5000);
}

TEST(RunIntervalTesterTest, CompletenessUnderNull) {
  const auto p = derive_interval_params(10.0, 0.5, 0.1);
  const Rng root(4);
  int accepts = 0;
  for (int t = 0; t < 500; ++t) {
    Rng rng = root.child(t);
    accepts += run_interval_tester(p, poisson_draws(10.0, p.m, rng)).accepted();
  }
  EXPECT_GE(accepts / 500.0, 0.9);
}

TEST(RunIntervalTesterTest, SoundnessAgainstMixture) {
  const auto p = derive_interval_params(10.0, kEpsStar, 0.1);
  const Rng root(5);
  int rejects = 0;
  for (int t = 0; t < 500; ++t) {
    Rng rng = root.child(t);
    rejects += run_interval_tester(p, mixture_draws(p.m, rng)).rejected();
  }
  EXPECT_GE(rejects / 500.0, 0.9);
}

}  // namespace
}  // namespace unifwatch
