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

#include "unifwatch/tracker.h"

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

namespace unifwatch {
namespace {

DiscreteDistribution heavy(std::int64_t n, double beta) {
  Vector<double> p = Vector<double>::Constant(n, (1.0 - beta) / static_cast<double>(n));
  p[n - 1] += beta;
  return DiscreteDistribution(p);
}

DiscreteDistribution point_mass(std::int64_t n) {
  Vector<double> p = Vector<double>::Zero(n);
  p[0] = 1.0;
  return DiscreteDistribution(p);
}

// Feeds the tracker until it stops being plausible.
void drive(Tracker& tracker, SampleStream& stream) {
  while (tracker.status() == TrackerStatus::kPlausible) tracker.feed(*stream.next());
}

TEST(TrackerTest, InitialState) {
  TrackerConfig c;
  c.n = 10;
  c.delta = 0.1;
  const Tracker t(c, Rng(1));
  EXPECT_EQ(t.stage(), 0);
  EXPECT_EQ(t.stage_m(), 1);
  EXPECT_DOUBLE_EQ(t.current_stage_delta(), 0.05);
  EXPECT_EQ(t.status(), TrackerStatus::kPlausible);
  EXPECT_EQ(t.samples_consumed(), 0);
  EXPECT_EQ(t.stage_target(), collision_group_count(0.05));
}

TEST(TrackerTest, StageBudgets) {
  double total = 0.0;
  for (std::int64_t h = 0; h < 40; ++h) {
    const double d = Tracker::stage_delta(0.1, h);
    EXPECT_DOUBLE_EQ(d, 0.1 / std::ldexp(2.0, static_cast<int>(h)));
    total += d;
    EXPECT_LT(total, 0.1);
  }
  // Large delta: early stages are capped at 0.1.
  EXPECT_DOUBLE_EQ(Tracker::stage_delta(1.0, 0), 0.1);
  EXPECT_DOUBLE_EQ(Tracker::stage_delta(1.0, 3), 1.0 / 16);
}

TEST(TrackerTest, ConfigValidation) {
  TrackerConfig c;
  c.n = 1;
  EXPECT_THROW(Tracker(c, Rng(1)), std::invalid_argument);
  c.n = 10;
  c.delta = 0.0;
  EXPECT_THROW(Tracker(c, Rng(1)), std::invalid_argument);
  c.delta = 0.1;
  c.max_stage = 0;
  EXPECT_THROW(Tracker(c, Rng(1)), std::invalid_argument);
}

TEST(TrackerTest, FeedRejectsOutOfRangeSymbol) {
  TrackerConfig c;
  c.n = 10;
  Tracker t(c, Rng(2));
  EXPECT_THROW(t.feed(0), std::invalid_argument);
  EXPECT_THROW(t.feed(11), std::invalid_argument);
  EXPECT_EQ(t.samples_consumed(), 0);
}

TEST(TrackerTest, PointMassRejectsAtSecondStage) {
  TrackerConfig c;
  c.n = 64;
  c.delta = 0.2;
  Tracker t(c, Rng(3));
  DistributionSampleStream stream(point_mass(64), Rng(4));
  drive(t, stream);
  ASSERT_EQ(t.status(), TrackerStatus::kRejected);
  ASSERT_EQ(t.stages().size(), 2u);
  // A single-sample group can never collide.
  EXPECT_EQ(t.stages()[0].outcome, Outcome::kAccept);
  EXPECT_EQ(t.stages()[1].outcome, Outcome::kReject);
  EXPECT_EQ(t.stages()[1].m, 2);
  EXPECT_EQ(t.samples_consumed(),
            collision_group_count(0.1) + 2 * collision_group_count(0.05));
  EXPECT_THROW(t.feed(1), std::logic_error);
}

TEST(TrackerTest, SampleAccountingAcrossStages) {
  TrackerConfig c;
  c.n = 10000;
  c.delta = 0.1;
  c.max_stage = 4;
  Tracker t(c, Rng(5));
  DistributionSampleStream stream(DiscreteDistribution::uniform(10000), Rng(6));
  std::int64_t fed = 0;
  while (t.status() == TrackerStatus::kPlausible) {
    const std::int64_t before_stage = t.stage();
    const std::int64_t remaining = t.stage_target() - t.stage_consumed();
    for (std::int64_t i = 0; i < remaining; ++i, ++fed) t.feed(*stream.next());
    if (t.status() == TrackerStatus::kPlausible) {
      EXPECT_EQ(t.stage(), before_stage + 1);
    }
  }
  EXPECT_EQ(t.samples_consumed(), fed);
  const std::int64_t recorded = std::accumulate(
      t.stages().begin(), t.stages().end(), std::int64_t{0},
      [](std::int64_t acc, const StageRecord& r) { return acc + r.samples; });
  EXPECT_EQ(recorded, fed);
  for (std::size_t h = 0; h < t.stages().size(); ++h) {
    EXPECT_EQ(t.stages()[h].m, std::int64_t{1} << h);
    EXPECT_DOUBLE_EQ(t.stages()[h].delta, Tracker::stage_delta(0.1, static_cast<std::int64_t>(h)));
  }
}

TEST(TrackerTest, MaxStageExhaustsBudget) {
  TrackerConfig c;
  c.n = 10000;
  c.delta = 0.1;
  c.max_stage = 2;
  Tracker t(c, Rng(7));
  DistributionSampleStream stream(DiscreteDistribution::uniform(10000), Rng(8));
  drive(t, stream);
  // Two single- and double-sample stages over 10000 symbols: collisions are rare.
  EXPECT_EQ(t.status(), TrackerStatus::kBudgetExhausted);
  EXPECT_EQ(t.stages().size(), 2u);
  EXPECT_THROW(t.feed(1), std::logic_error);
}

TEST(TrackerTest, DeterministicGivenSeeds) {
  TrackerConfig c;
  c.n = 64;
  c.delta = 0.2;
  c.overrides.r = 4;
  auto run = [&] {
    Tracker t(c, Rng(9));
    DistributionSampleStream stream(heavy(64, 0.5), Rng(10));
    drive(t, stream);
    return t.samples_consumed();
  };
  EXPECT_EQ(run(), run());
}

TEST(TrackerTest, UniformRarelyRejectsOverSixStages) {
  TrackerConfig c;
  c.n = 64;
  c.delta = 0.2;
  c.max_stage = 6;
  c.overrides.r = 8;  // Fewer repeats only lowers the false-rejection rate.
  const auto u = DiscreteDistribution::uniform(64);
  const Rng root(11);
  int rejected = 0;
  constexpr int kTrials = 200;
  for (int i = 0; i < kTrials; ++i) {
    const Rng trial = root.child(static_cast<std::uint64_t>(i));
    Tracker t(c, trial.child(1));
    DistributionSampleStream stream(u, trial.child(0));
    drive(t, stream);
    rejected += t.status() == TrackerStatus::kRejected;
  }
  EXPECT_LE(rejected / static_cast<double>(kTrials), 0.3);
}

TEST(TrackerTest, HeavyElementRejectsEarly) {
  TrackerConfig c;
  c.n = 64;
  c.delta = 0.2;
  c.max_stage = 6;
  c.overrides.r = 8;
  const auto p = heavy(64, 0.5);
  const Rng root(12);
  int rejected = 0;
  for (int i = 0; i < 50; ++i) {
    const Rng trial = root.child(static_cast<std::uint64_t>(i));
    Tracker t(c, trial.child(1));
    DistributionSampleStream stream(p, trial.child(0));
    drive(t, stream);
    rejected += t.status() == TrackerStatus::kRejected;
  }
  EXPECT_EQ(rejected, 50);
}

TEST(ExpectedSamplesBoundTest, LinearStages) {
  EXPECT_NEAR(tracker_expected_samples_bound([](double m) { return m; }, 3), 17.0, 1e-12);
  EXPECT_NEAR(tracker_expected_samples_bound([](double m) { return m; }, 0), 1.25, 1e-12);
}

TEST(ExpectedSamplesBoundTest, Homogeneous) {
  const auto f = [](double m) { return m * std::sqrt(m) + 3.0; };
  for (std::int64_t h : {0, 2, 7}) {
    const double base = tracker_expected_samples_bound(f, h);
    const double scaled = tracker_expected_samples_bound([&](double m) { return 7.5 * f(m); }, h);
    EXPECT_NEAR(scaled, 7.5 * base, 1e-12 * scaled);
  }
}

TEST(ExpectedSamplesBoundTest, LogSquaredStages) {
  // 40-digit series summation.
  const double expected = 249.0885126406511493;
  const double got = tracker_expected_samples_bound(
      [](double m) { return m * std::pow(std::log(m + 2.0), 2); }, 4);
  EXPECT_NEAR(got, expected, 1e-9);
}

TEST(ExpectedSamplesBoundTest, Errors) {
  EXPECT_THROW(tracker_expected_samples_bound([](double m) { return m; }, -1),
               std::invalid_argument);
  // Grows faster than 10^j: no convergence.
  EXPECT_THROW(tracker_expected_samples_bound([](double m) { return m * m * m * m; }, 0),
               std::domain_error);
}

}  // namespace
}  // namespace unifwatch
