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

// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance                  runs A1 through A10
//   acceptance --criterion A4   runs one
//
// Each criterion also carries a wall-clock budget; exceeding it is a failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "unifwatch/distances.h"
#include "unifwatch/full_tester.h"
#include "unifwatch/harness.h"
#include "unifwatch/interval_tester.h"
#include "unifwatch/oracle.h"
#include "unifwatch/poisson.h"
#include "unifwatch/tracker.h"
#include "unifwatch/uniformity_tester.h"

namespace unifwatch {
namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Result()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string describe(const Proportion& p) {
  return fmt("%.3f [%.3f, %.3f] (%lld/%lld)", p.rate, p.lower, p.upper,
             static_cast<long long>(p.successes), static_cast<long long>(p.trials));
}

DiscreteDistribution heavy(std::int64_t n, double beta) {
  FamilySpec spec;
  spec.kind = FamilyKind::kHeavyElement;
  spec.n = n;
  spec.beta = beta;
  return realize_family(spec);
}

DiscreteDistribution point_mass(std::int64_t n) {
  Vector<double> p = Vector<double>::Zero(n);
  p[0] = 1.0;
  return DiscreteDistribution(p);
}

std::vector<double> random_rates(Rng& rng, double top, std::size_t max_count) {
  std::vector<double> rates(1 + rng.uniform_below(max_count));
  for (auto& r : rates) r = top * rng.uniform01();
  return rates;
}

// Discrete convexity of x -> mixture(x) / Poi(mu)(x), checked relative to the
// middle value so that astronomically large ratios stay comparable.
Result a1_convexity() {
  Rng rng(101);
  int violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> rates = random_rates(rng, 50.0, 5);
    if (rng.uniform_below(4) == 0) rates.push_back(0.0);
    rates.push_back(50.0 * (1.0 - rng.uniform01()));  // at least one positive rate
    const PoissonMixture mix(rates);
    const double mu = 50.0 * (1.0 - rng.uniform01());
    const auto x = static_cast<std::int64_t>(1 + rng.uniform_below(199));
    const double mid = log_pmf_ratio(mix, mu, x);
    const double lhs =
        std::exp(log_pmf_ratio(mix, mu, x + 1) - mid) + std::exp(log_pmf_ratio(mix, mu, x - 1) - mid);
    const double slack = lhs - 2.0;
    worst = std::min(worst, slack);
    if (slack < -1e-9) ++violations;
  }
  return {violations == 0,
          fmt("10000 checks, %d violations, smallest relative slack %.3g", violations, worst)};
}

Result a2_threshold_sets() {
  Rng rng(202);
  std::map<ThresholdShape, int> shapes;
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const double mu = 0.5 + 30.0 * rng.uniform01();
    const PoissonMixture mix(random_rates(rng, 40.0, 5));
    const double r = 3.0 * rng.uniform01();
    try {
      ++shapes[threshold_set_structure(mu, mix, r, 200).shape];
    } catch (const StructureViolation&) {
      ++violations;
    }
  }
  return {violations == 0,
          fmt("1000 instances, %d violations; interval %d, complement %d, empty %d, full %d",
              violations, shapes[ThresholdShape::kInterval], shapes[ThresholdShape::kComplementInterval],
              shapes[ThresholdShape::kEmpty], shapes[ThresholdShape::kFull])};
}

Result a3_interval_tester() {
  const PoissonMixture mix({5.0, 15.0});
  const double eps = exact_hellinger_poisson_vs_mixture(10.0, mix, 1e-9).value;
  // Regression against the 40-digit reference.
  const bool pinned = std::abs(eps - 0.29409112421617626) < 1e-9;
  const auto params = derive_interval_params(10.0, eps, 0.1);
  const Rng root(303);
  std::int64_t accepts = 0;
  std::int64_t rejects = 0;
  std::vector<std::int64_t> xs(static_cast<std::size_t>(params.m));
  for (int t = 0; t < 500; ++t) {
    Rng null_rng = root.child(2 * static_cast<std::uint64_t>(t));
    for (auto& x : xs) x = sample_poisson(10.0, null_rng);
    accepts += run_interval_tester(params, xs).accepted();
    Rng alt_rng = root.child(2 * static_cast<std::uint64_t>(t) + 1);
    for (auto& x : xs) x = sample_poisson(alt_rng.uniform_below(2) == 0 ? 5.0 : 15.0, alt_rng);
    rejects += run_interval_tester(params, xs).rejected();
  }
  const Proportion acc = wilson_interval(accepts, 500);
  const Proportion rej = wilson_interval(rejects, 500);
  return {pinned && acc.rate >= 0.86 && rej.rate >= 0.86,
          fmt("eps %.10f, m %lld, x_max %lld; accept under Poi(10) %s; reject under mixture %s",
              eps, static_cast<long long>(params.m), static_cast<long long>(params.x_max),
              describe(acc).c_str(), describe(rej).c_str())};
}

FrequencyVector poissonized(const std::vector<double>& rates, std::int64_t s, Rng& rng) {
  std::vector<double> scaled(rates);
  for (auto& r : scaled) r *= static_cast<double>(s);
  return sample_perm_poisson(scaled, rng);
}

Result a4_full_completeness() {
  const auto params = derive_full_params(64, 2.0, 0.05);
  const std::vector<double> rates(64, 2.0);
  const Rng root(404);
  std::int64_t accepts = 0;
  for (int t = 0; t < 200; ++t) {
    const Rng trial = root.child(static_cast<std::uint64_t>(t));
    Rng data_rng = trial.child(0);
    accepts += run_full_tester(params, poissonized(rates, params.s, data_rng), trial.child(1)).accepted();
  }
  const Proportion acc = wilson_interval(accepts, 200);
  return {acc.rate >= 0.90,
          fmt("s %lld, r %lld, x_max %lld, tau %.6g; accept rate %s", static_cast<long long>(params.s),
              static_cast<long long>(params.r), static_cast<long long>(params.x_max), params.tau,
              describe(acc).c_str())};
}

Result a5_full_soundness() {
  constexpr std::int64_t kN = 64;
  const double mu = 2.0;
  const auto p = heavy(kN, 0.5);
  std::vector<double> rates(kN);
  for (std::int64_t i = 0; i < kN; ++i) rates[static_cast<std::size_t>(i)] = mu * kN * p[i];
  const TvLowerBound tv = perm_poisson_tv_lower_bound(mu, rates, 5000, Rng(505));
  const auto params = derive_full_params(kN, mu, 0.05);
  const Rng root(506);
  std::int64_t rejects = 0;
  for (int t = 0; t < 200; ++t) {
    const Rng trial = root.child(static_cast<std::uint64_t>(t));
    Rng data_rng = trial.child(0);
    rejects += run_full_tester(params, poissonized(rates, params.s, data_rng), trial.child(1)).rejected();
  }
  const Proportion rej = wilson_interval(rejects, 200);
  return {tv.lower_bound >= 0.5 && rej.rate >= 0.90,
          fmt("certified TV >= %.4f (%s statistic, gap %.4f, margin %.4f); reject rate %s",
              tv.lower_bound, tv.statistic.c_str(), tv.gap, tv.margin, describe(rej).c_str())};
}

Result a6_split_fidelity() {
  constexpr std::int64_t kS = 5;
  constexpr int kTrials = 100000;
  bool pass = true;
  std::string detail;
  Rng rng(606);
  for (double lambda : {0.5, 2.0, 20.0}) {
    // Marginals pool all s outputs; the covariance uses coordinates 0 and 1.
    double sum = 0.0;
    double sum_sq = 0.0;
    double sum_01 = 0.0;
    double sum_0 = 0.0;
    double sum_1 = 0.0;
    for (int t = 0; t < kTrials; ++t) {
      const auto y = sample_poisson(lambda * kS, rng);
      const auto parts = poisson_split(y, kS, rng);
      for (auto v : parts) {
        sum += static_cast<double>(v);
        sum_sq += static_cast<double>(v) * static_cast<double>(v);
      }
      sum_0 += static_cast<double>(parts[0]);
      sum_1 += static_cast<double>(parts[1]);
      sum_01 += static_cast<double>(parts[0]) * static_cast<double>(parts[1]);
    }
    const double count = static_cast<double>(kTrials) * kS;
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    const double cov = sum_01 / kTrials - (sum_0 / kTrials) * (sum_1 / kTrials);
    const double sigma = std::sqrt((lambda * lambda + 2 * lambda * lambda * lambda) / kTrials);
    const bool ok = std::abs(mean - lambda) <= 0.01 * lambda &&
                    std::abs(var - lambda) <= 0.01 * lambda && std::abs(cov) <= 3 * sigma;
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += fmt("lambda %.1f: mean %.4f var %.4f cov %.2e (3 sigma %.2e)%s", lambda, mean, var,
                  cov, 3 * sigma, ok ? "" : " OUT");
  }
  return {pass, detail};
}

std::int64_t drive_tracker(const TrackerConfig& config, const DiscreteDistribution& p,
                           const Rng& trial, TrackerStatus* status) {
  Tracker tracker(config, trial.child(1));
  DistributionSampleStream stream(p, trial.child(0));
  while (tracker.status() == TrackerStatus::kPlausible) tracker.feed(*stream.next());
  *status = tracker.status();
  return tracker.samples_consumed();
}

struct RejectStats {
  std::int64_t rejected = 0;
  std::int64_t trials = 0;
  double mean_samples = 0.0;
};

Result a7_baseline_separation() {
  constexpr std::int64_t kN = 1000;
  constexpr double kBeta = 0.2;
  constexpr int kTrials = 100;
  const auto p = heavy(kN, kBeta);

  TrackerConfig config;
  config.n = kN;
  config.delta = 0.1;
  config.max_stage = 8;
  RejectStats tracker;
  const Rng tracker_root(707);
  for (int t = 0; t < kTrials; ++t) {
    TrackerStatus status;
    const std::int64_t used =
        drive_tracker(config, p, tracker_root.child(static_cast<std::uint64_t>(t)), &status);
    ++tracker.trials;
    if (status == TrackerStatus::kRejected) {
      ++tracker.rejected;
      tracker.mean_samples += static_cast<double>(used);
    }
  }
  tracker.mean_samples /= std::max<std::int64_t>(1, tracker.rejected);

  const auto m = static_cast<std::int64_t>(std::ceil(8.0 * std::sqrt(double{kN}) / (kBeta * kBeta)));
  RejectStats baseline;
  const Rng baseline_root(708);
  for (int t = 0; t < kTrials; ++t) {
    DistributionSampleStream stream(p, baseline_root.child(static_cast<std::uint64_t>(t)));
    ++baseline.trials;
    if (collision_count_baseline(kN, m, stream).rejected()) {
      ++baseline.rejected;
      baseline.mean_samples += static_cast<double>(m);
    }
  }
  baseline.mean_samples /= std::max<std::int64_t>(1, baseline.rejected);
  const double ratio = baseline.mean_samples / tracker.mean_samples;
  return {tracker.rejected > 0 && baseline.rejected > 0 && ratio > 2.0,
          fmt("tracker rejects %lld/%lld, mean samples-to-reject %.1f; collision baseline (m %lld) "
              "rejects %lld/%lld, mean %.1f; ratio baseline/tracker %.3f (need > 2)",
              static_cast<long long>(tracker.rejected), static_cast<long long>(tracker.trials),
              tracker.mean_samples, static_cast<long long>(m), static_cast<long long>(baseline.rejected),
              static_cast<long long>(baseline.trials), baseline.mean_samples, ratio)};
}

Result a8_tracker() {
  constexpr std::int64_t kN = 64;
  constexpr int kTrials = 200;
  TrackerConfig config;
  config.n = kN;
  config.delta = 0.2;
  config.max_stage = 6;
  const auto u = DiscreteDistribution::uniform(kN);

  auto run = [&](const DiscreteDistribution& p, std::uint64_t seed) {
    RejectStats stats;
    const Rng root(seed);
    for (int t = 0; t < kTrials; ++t) {
      TrackerStatus status;
      const std::int64_t used = drive_tracker(config, p, root.child(static_cast<std::uint64_t>(t)), &status);
      ++stats.trials;
      if (status == TrackerStatus::kRejected) {
        ++stats.rejected;
        stats.mean_samples += static_cast<double>(used);
      }
    }
    stats.mean_samples /= std::max<std::int64_t>(1, stats.rejected);
    return stats;
  };
  const RejectStats null_run = run(u, 801);
  const RejectStats point = run(point_mass(kN), 802);
  const auto h = heavy(kN, 0.5);
  const RejectStats heavy_run = run(h, 803);
  const auto proxy = static_cast<std::int64_t>(std::ceil(1.0 / hellinger_sq(h, u)));
  const double null_rate = static_cast<double>(null_run.rejected) / kTrials;
  return {null_rate <= 0.3 && point.rejected == kTrials && heavy_run.rejected == kTrials,
          fmt("uniform ever-reject %.3f (%lld/%d); point mass rejects %lld/%d, mean samples %.1f; "
              "heavy(64, 0.5) rejects %lld/%d, mean samples %.1f, proxy opt %lld, ratio %.1f",
              null_rate, static_cast<long long>(null_run.rejected), kTrials,
              static_cast<long long>(point.rejected), kTrials, point.mean_samples,
              static_cast<long long>(heavy_run.rejected), kTrials, heavy_run.mean_samples,
              static_cast<long long>(proxy), heavy_run.mean_samples / static_cast<double>(proxy))};
}

DiscreteDistribution random_distribution(Eigen::Index n, Rng& rng) {
  Vector<double> p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Occasional exact zeros exercise the support edge cases.
    p[i] = rng.uniform_below(8) == 0 ? 0.0 : rng.uniform01();
  }
  if (p.sum() == 0.0) p[0] = 1.0;
  return DiscreteDistribution(p / p.sum());
}

Result a9_distance_algebra() {
  Rng rng(909);
  int sandwich = 0;
  int kl = 0;
  int triangle = 0;
  int eliminate = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<Eigen::Index>(2 + rng.uniform_below(49));
    const auto p = random_distribution(n, rng);
    auto q = random_distribution(n, rng);
    const auto r = random_distribution(n, rng);
    const double h = hellinger_sq(p, q);
    const double tv = tv_distance(p, q);
    if (0.5 * h > tv + 1e-10 || tv > std::sqrt(h) + 1e-10) ++sandwich;
    if (kl_divergence(p, q) < h - 1e-12) ++kl;
    const double a = rng.uniform01() * 4 - 2;
    const double b = rng.uniform01() * 4 - 2;
    const double c = rng.uniform01() * 4 - 2;
    if ((a - c) * (a - c) > 2 * (a - b) * (a - b) + 2 * (b - c) * (b - c) + 1e-12) ++triangle;
    if (hellinger_sq(p, r) > 2 * hellinger_sq(p, q) + 2 * hellinger_sq(q, r) + 1e-12) ++triangle;
  }
  int checked = 0;
  while (checked < 1000) {
    const double p_s = rng.uniform01();
    const double q_s = rng.uniform01();
    const double delta = hellinger_sq_bernoulli(p_s, q_s) * (0.2 + 0.8 * rng.uniform01());
    if (delta <= 1e-6) continue;
    const double p_cut = p_s * rng.uniform01();
    const double p_t = p_cut + (1.0 - p_s) * rng.uniform01();
    const double q_t = delta / 20.0 * rng.uniform01();
    const double q_cut = std::min(q_s, q_t) * rng.uniform01();
    if (q_t - q_cut > 1.0 - q_s) continue;
    ++checked;
    try {
      const auto res = eliminate_large_witness({p_s, q_s, p_s - p_cut, q_s - q_cut, p_t, q_t}, delta);
      if (res.value < delta / 120.0) ++eliminate;
    } catch (const std::logic_error&) {
      ++eliminate;
    }
  }
  return {sandwich + kl + triangle + eliminate == 0,
          fmt("violations: sandwich %d, KL %d, almost-triangle %d, eliminate-large %d "
              "(1000 instances each)",
              sandwich, kl, triangle, eliminate)};
}

std::string records_without_wall_time(std::vector<TrialRecord> records) {
  for (auto& r : records) r.wall_ms = 0.0;
  std::ostringstream out;
  write_jsonl(out, records);
  return out.str();
}

Result a10_round_trip() {
  Rng rng(1010);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::int64_t>(1 + rng.uniform_below(50));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n));
    for (auto& c : counts) c = static_cast<std::int64_t>(rng.uniform_below(20));
    const FrequencyVector freq(counts);
    const auto symbols = depoissonize(freq, rng);
    if (static_cast<std::int64_t>(symbols.size()) != freq.total() || poissonize(symbols, n) != freq) {
      ++failures;
    }
    // Sequence -> histogram -> sequence keeps the multiset.
    auto again = depoissonize(poissonize(symbols, n), rng);
    auto sorted = symbols;
    std::sort(sorted.begin(), sorted.end());
    std::sort(again.begin(), again.end());
    if (again != sorted) ++failures;
  }
  const std::string dir = UNIFWATCH_FIXTURE_DIR;
  std::ifstream config_in(dir + "/simulate_pinned.json");
  std::ifstream golden_in(dir + "/simulate_pinned.jsonl");
  if (!config_in || !golden_in) return {false, "missing pinned simulate fixtures"};
  const ExperimentConfig config = config_from_json(nlohmann::json::parse(config_in));
  const std::string first = records_without_wall_time(run_experiment(config).records);
  const std::string second = records_without_wall_time(run_experiment(config).records);
  const std::string golden = records_without_wall_time(read_jsonl(golden_in));
  return {failures == 0 && first == second && first == golden,
          fmt("1000 vectors, %d identity failures; rerun identical: %s; matches golden records: %s",
              failures, first == second ? "yes" : "no", first == golden ? "yes" : "no")};
}

}  // namespace
}  // namespace unifwatch

int main(int argc, char** argv) {
  using namespace unifwatch;
  CLI::App app{"Acceptance criteria A1-A10"};
  std::string only;
  app.add_option("--criterion", only, "Run a single criterion, e.g. A4");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"A1", 10, a1_convexity},          {"A2", 30, a2_threshold_sets},
      {"A3", 120, a3_interval_tester},   {"A4", 300, a4_full_completeness},
      {"A5", 600, a5_full_soundness},    {"A6", 60, a6_split_fidelity},
      {"A7", 600, a7_baseline_separation}, {"A8", 900, a8_tracker},
      {"A9", 30, a9_distance_algebra},   {"A10", 30, a10_round_trip},
  };
  bool all = true;
  bool found = false;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name != only) continue;
    found = true;
    const auto start = std::chrono::steady_clock::now();
    Result outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = outcome.pass && in_time;
    all = all && pass;
    std::printf("%s %s  %s; %.1f s of %.0f s budget%s\n", c.name.c_str(), pass ? "PASS" : "FAIL",
                outcome.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : " (over budget)");
    std::fflush(stdout);
  }
  if (!found) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return all ? 0 : 1;
}
